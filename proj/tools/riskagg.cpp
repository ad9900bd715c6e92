// riskagg: command-line driver for secure risk aggregation.
//
// Exit codes: 0 ok, 2 config or input error, 3 protocol abort,
// 4 verification failure. Errors are written to stderr as one JSON object.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskagg/harness.hpp"
#include "riskagg/riskstats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskagg;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kProtocol = 3, kVerify = 4 };

struct Failure {
  int code;
  std::string kind;
  std::string message;
  std::optional<std::size_t> index;
};

[[noreturn]] void fail(int code, std::string kind, std::string message,
                       std::optional<std::size_t> index = std::nullopt) {
  throw Failure{code, std::move(kind), std::move(message), index};
}

void report(const Failure& f) {
  json j{{"error", f.kind}, {"message", f.message}, {"exit_code", f.code}};
  if (f.index) j["divergent_index"] = *f.index;
  std::cerr << j.dump() << "\n";
}

struct Options {
  std::string protocol = "sum";
  std::uint16_t m = 3;
  std::uint32_t n = 0;
  std::uint64_t q = 0;
  std::uint64_t p = 0;
  std::uint64_t tau = 0;
  std::string bound;
  std::optional<std::uint64_t> seed;
  std::string listen;
  std::string peers;
  std::vector<std::string> inputs;
  std::string output;
  std::size_t trials = 10000;
  std::uint16_t party = 0;
  std::string session;
  unsigned rsa_bits = 0;
  std::string values = "0.1,0.2,0.3";
  bool biased = false;
  double alpha = 0.01;
};

RunSettings settings(const Options& o, std::string label) {
  RunSettings r;
  r.seed = o.seed;
  r.label = std::move(label);
  return r;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t\r\n");
    const auto e = item.find_last_not_of(" \t\r\n");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(kConfig, "config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// An input argument is a file path when it names an existing file, otherwise
// an inline comma- or whitespace-separated list.
std::vector<std::string> tokens(const std::string& arg) {
  std::string text = fs::is_regular_file(arg) ? read_file(arg) : arg;
  for (char& c : text)
    if (c == '\n' || c == '\t' || c == ' ' || c == '\r') c = ',';
  return split(text, ',');
}

std::vector<SeriesInput> read_parties(const Options& o, std::size_t min_parties) {
  if (o.inputs.size() < min_parties)
    fail(kConfig, "config",
         "need at least " + std::to_string(min_parties) + " --input files, got " +
             std::to_string(o.inputs.size()));
  std::vector<SeriesInput> out;
  for (std::size_t i = 0; i < o.inputs.size(); ++i)
    out.push_back(read_series_csv(fs::path(o.inputs[i]), static_cast<PartyId>(i + 1)));
  return out;
}

void require_bound(const Options& o) {
  if (o.bound.empty())
    fail(kConfig, "config", "--bound is required: inputs are divided by B before aggregation");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(kConfig, "config", "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kConfig, "config", "cannot write " + path.string());
  out << text;
}

std::string mod_text(const ModReal& v) { return Fixed::from_raw(v.raw()).to_string(18); }

json session_json(const RunOutcome& r) {
  json j{{"result", result_to_json(r.result)},
         {"rounds", r.transcript.rounds()},
         {"session", hex(r.transcript.config.session)}};
  if (!r.transcript.warnings.empty()) j["warnings"] = r.transcript.warnings;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_sum(const Options& o) {
  require_bound(o);
  const auto parties = read_parties(o, 2);
  const auto rows = aggregate_sum(parties, o.bound, settings(o, "sum"));
  std::ostringstream csv;
  csv << "date,aggregate\n";
  for (const auto& r : rows) csv << r.date << "," << r.total << "\n";
  std::cout << csv.str();
  if (!o.output.empty()) {
    const fs::path dir(o.output);
    ensure_dir(dir);
    write_text(dir / "aggregate.csv", csv.str());
    json j{{"command", "sum"}, {"bound", o.bound}, {"parties", parties.size()}, {"rows", json::array()}};
    for (const auto& r : rows) {
      j["rows"].push_back({{"date", r.date},
                           {"aggregate", r.total},
                           {"scaled", r.scaled_total.to_string(18)},
                           {"session", session_json(r.session)}});
      r.session.transcript.save(dir / "transcripts" / r.date);
    }
    write_text(dir / "result.json", j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_herfindahl(const Options& o) {
  require_bound(o);
  const auto parties = read_parties(o, 2);
  for (const auto& p : parties)
    if (p.dates != parties.front().dates)
      fail(kConfig, "config",
           "ragged timestamps: party " + std::to_string(p.party) + " differs from party 1");
  std::ostringstream csv;
  csv << "date,hhi\n";
  json j{{"command", "herfindahl"}, {"bound", o.bound}, {"parties", parties.size()}, {"rows", json::array()}};
  const fs::path dir(o.output);
  if (!o.output.empty()) ensure_dir(dir);
  const auto& dates = parties.front().dates;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    std::vector<std::string> exposures;
    for (const auto& p : parties) exposures.push_back(p.values[t]);
    const auto h = herfindahl(exposures, o.bound, settings(o, "herfindahl/" + dates[t]));
    std::ostringstream v;
    v.precision(17);
    v << h.hhi;
    csv << dates[t] << "," << v.str() << "\n";
    j["rows"].push_back({{"date", dates[t]},
                         {"hhi", h.hhi},
                         {"total_scaled", h.total.to_string(18)},
                         {"sum_squares_scaled", h.sum_squares.to_string(18)}});
    if (!o.output.empty()) {
      h.first.transcript.save(dir / "transcripts" / dates[t] / "total");
      h.second.transcript.save(dir / "transcripts" / dates[t] / "squares");
    }
  }
  std::cout << csv.str();
  if (!o.output.empty()) {
    write_text(dir / "hhi.csv", csv.str());
    write_text(dir / "result.json", j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_correlation(const Options& o) {
  if (o.inputs.size() != 2) fail(kConfig, "config", "correlation takes exactly two --input files");
  const auto parties = read_parties(o, 2);
  if (parties[0].dates != parties[1].dates)
    fail(kConfig, "config", "ragged timestamps: the two series cover different dates");
  const std::uint64_t q = o.q == 0 ? (std::uint64_t{1} << 16) + 1 : o.q;
  if (q < 3 || q % 2 == 0) fail(kConfig, "config", "--q must be odd and >= 3");
  CorrelationBackend backend = CorrelationBackend::sip1;
  if (o.protocol == "sip3")
    backend = CorrelationBackend::sip3;
  else if (o.protocol != "sip1" && o.protocol != "sum")
    fail(kConfig, "config", "correlation runs on sip1 or sip3, not " + o.protocol);
  const unsigned bits = o.rsa_bits == 0 ? 512 : o.rsa_bits;
  const auto r = secure_correlation(parties[0].as_doubles(), parties[1].as_doubles(), q, backend,
                                    settings(o, "correlation"), bits);
  json j{{"command", "correlation"},
         {"backend", backend == CorrelationBackend::sip1 ? "sip1" : "sip3"},
         {"n", parties[0].dates.size()},
         {"q", q},
         {"estimate", r.estimate},
         {"raw_inner_product", r.raw_inner_product},
         {"step", r.step},
         {"error_bound", r.error_bound},
         {"sessions", json::array()}};
  for (const auto& s : r.sessions) j["sessions"].push_back(session_json(s));
  std::cout << j.dump(2) << "\n";
  if (!o.output.empty()) {
    const fs::path dir(o.output);
    ensure_dir(dir);
    write_text(dir / "result.json", j.dump(2) + "\n");
    for (std::size_t i = 0; i < r.sessions.size(); ++i)
      r.sessions[i].transcript.save(dir / "transcripts" / ("session-" + std::to_string(i + 1)));
  }
  return kOk;
}

// Exact decimal sum of decimal literals.
std::string decimal_sum(const std::vector<std::string>& values) {
  BigInt num = 0;
  BigInt den = 1;
  for (const auto& v : values) {
    const auto d = detail::parse_decimal(v);
    num = num * d.denominator + d.numerator * den;
    den *= d.denominator;
  }
  BigInt pow10 = 1;
  for (int i = 0; i < 9; ++i) pow10 *= 10;
  const BigInt scaled = detail::round_div(num * pow10, den);
  std::string whole = BigInt(scaled / pow10).str();
  std::string frac = BigInt(scaled % pow10).str();
  frac.insert(0, 9 - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return frac.empty() ? whole : whole + "." + frac;
}

int cmd_demo_bhc(const Options& o) {
  const fs::path data = o.inputs.empty() ? fs::path("data/bhc") : fs::path(o.inputs.front());
  const std::string bound = o.bound.empty() ? "1000" : o.bound;
  std::vector<SeriesInput> banks;
  for (PartyId i = 1; i <= 3; ++i) {
    const fs::path f = data / ("bank" + std::to_string(i) + ".csv");
    if (!fs::exists(f)) fail(kConfig, "config", "missing input file " + f.string());
    banks.push_back(read_series_csv(f, i));
  }
  const auto rows = aggregate_sum(banks, bound, settings(o, "demo-bhc"));

  std::ostringstream a, b, c;
  a << "date,bank1,bank2,bank3,aggregate\n";
  b << "date,R12,R13,R21,R23,R31,R32\n";
  c << "date,S1,S2,S3,aggregate\n";
  std::size_t mismatches = 0;
  std::optional<std::string> first_mismatch;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& row = rows[t];
    std::vector<std::string> xs;
    Fixed lattice_sum;
    for (const auto& bank : banks) {
      xs.push_back(bank.values[t]);
      lattice_sum = lattice_sum + scale_to_unit(bank.values[t], bound);
    }
    const std::string plain = decimal_sum(xs);
    if (row.scaled_total != lattice_sum || row.total != plain) {
      ++mismatches;
      if (!first_mismatch) first_mismatch = row.date;
    }
    a << row.date << "," << xs[0] << "," << xs[1] << "," << xs[2] << "," << plain << "\n";

    const auto& views = row.session.transcript.views;
    const auto entry = [&](PartyId p, const std::string& label) {
      const ViewEntry* e = views.at(p).find(label);
      if (e == nullptr) fail(kProtocol, "protocol", "view of party " + std::to_string(p) + " lacks " + label);
      ByteReader r(e->value);
      return mod_text(r.mod_real(3));
    };
    b << row.date;
    for (PartyId i = 1; i <= 3; ++i)
      for (PartyId j = 1; j <= 3; ++j)
        if (i != j) b << "," << entry(i, "R[" + std::to_string(i) + "," + std::to_string(j) + "]");
    b << "\n";
    c << row.date;
    for (PartyId i = 1; i <= 3; ++i) c << "," << entry(i, "S[" + std::to_string(i) + "]");
    c << "," << row.total << "\n";
  }

  const fs::path out = o.output.empty() ? fs::path("bhc-demo") : fs::path(o.output);
  ensure_dir(out);
  write_text(out / "panel_a_inputs.csv", a.str());
  write_text(out / "panel_b_masks.csv", b.str());
  write_text(out / "panel_c_published.csv", c.str());
  json j{{"command", "demo-bhc"},
         {"quarters", rows.size()},
         {"bound", bound},
         {"scale_note", "masks and S values are in units of B, modulo 3"},
         {"aggregates_match", mismatches == 0},
         {"output", out.string()}};
  write_text(out / "result.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  if (mismatches != 0)
    fail(kVerify, "verification",
         std::to_string(mismatches) + " quarters where the secure aggregate differs, first " +
             *first_mismatch);
  return kOk;
}

int cmd_views(const Options& o) {
  if (o.trials == 0) fail(kConfig, "config", "--trials must be positive");
  const auto text = split(o.values, ',');
  std::vector<Fixed> inputs;
  for (const auto& v : text) inputs.push_back(Fixed::from_decimal(v));
  if (inputs.size() != o.m)
    fail(kConfig, "config",
         "--values lists " + std::to_string(inputs.size()) + " inputs for --m " + std::to_string(o.m));
  const std::uint64_t seed = o.seed ? *o.seed : OsEntropy().next_u64();
  SourceFactory sources;
  if (o.biased)
    sources = [](const SessionConfig& c, PartyId p) {
      return std::make_unique<BiasedSource>(default_source(c, p));
    };
  const auto rep = uniformity_report(inputs, o.trials, seed, sources, o.alpha);
  json j = rep.to_json();
  j["seed"] = seed;
  if (!rep.notice.empty()) std::cerr << rep.notice << "\n";
  if (o.output.empty()) {
    rep.write_csv(std::cout);
    std::cerr << j.dump(2) << "\n";
  } else {
    std::ofstream out(o.output, std::ios::binary);
    if (!out) fail(kConfig, "config", "cannot write " + o.output);
    rep.write_csv(out);
    std::cout << j.dump(2) << "\n";
  }
  if (rep.plane_violations != 0)
    fail(kVerify, "verification",
         std::to_string(rep.plane_violations) + " samples violate the sum constraint");
  return kOk;
}

int cmd_verify(const std::string& dir) {
  Transcript t;
  try {
    t = Transcript::load(dir);
  } catch (const Error& e) {
    fail(kVerify, "verification", std::string("unreadable transcript: ") + e.what());
  }
  const auto rep = verify_transcript(t);
  json j{{"ok", rep.ok},
         {"replayed", rep.replayed},
         {"protocol", std::string(protocol_name(t.config.protocol))},
         {"rounds", t.rounds()},
         {"declared_rounds", declared_rounds(t.config.protocol)},
         {"message", rep.message}};
  if (rep.divergent_index) j["divergent_index"] = *rep.divergent_index;
  std::cout << j.dump(2) << "\n";
  if (!rep.ok) fail(kVerify, "verification", rep.message, rep.divergent_index);
  return kOk;
}

SessionConfig session_config(const Options& o) {
  SessionConfig c;
  c.protocol = parse_protocol(o.protocol);
  c.parties = o.m;
  if (c.protocol == ProtocolId::sip1 || c.protocol == ProtocolId::sip2) c.parties = 3;
  if (c.protocol == ProtocolId::sip3) c.parties = 2;
  c.n = o.n == 0 ? 1 : o.n;
  c.q = o.q;
  c.p = o.p;
  c.tau = o.tau;
  c.signed_codes = false;
  if (o.rsa_bits != 0) c.rsa_bits = o.rsa_bits;
  c.seed = o.seed;
  if (!o.session.empty()) c.session = parse_session_id(o.session);
  return c;
}

Fixed sum_input(const std::string& value, const std::string& bound) {
  return bound.empty() ? Fixed::from_decimal(value) : scale_to_unit(value, bound);
}

PartyInput parse_party_input(const SessionConfig& c, PartyId id, const std::string& arg,
                             const std::string& bound) {
  const bool helper = (c.protocol == ProtocolId::sip1 || c.protocol == ProtocolId::sip2) && id == 3;
  if (helper) {
    if (!arg.empty() && arg != "-") fail(kConfig, "config", "party 3 is the helper and takes no input");
    return std::monostate{};
  }
  if (arg.empty() || arg == "-")
    fail(kConfig, "config", "party " + std::to_string(id) + " needs an input");
  const auto toks = tokens(arg);
  PartyInput in;
  switch (c.protocol) {
    case ProtocolId::secure_sum:
      if (toks.size() != 1) fail(kConfig, "config", "secure sum input is a single value");
      in = sum_input(toks.front(), bound);
      break;
    case ProtocolId::sip2: {
      std::vector<Fixed> v;
      for (const auto& t : toks) v.push_back(sum_input(t, bound));
      in = std::move(v);
      break;
    }
    case ProtocolId::sip1:
    case ProtocolId::sip3: {
      std::vector<std::int64_t> v;
      for (const auto& t : toks) {
        std::size_t used = 0;
        long long code = 0;
        try {
          code = std::stoll(t, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != t.size()) fail(kConfig, "config", "bad integer code '" + t + "'");
        v.push_back(code);
      }
      in = std::move(v);
      break;
    }
  }
  return in;
}

// n defaults to the length of the first vector input.
void fill_length(SessionConfig& c, const std::vector<PartyInput>& inputs) {
  if (c.protocol == ProtocolId::secure_sum) return;
  for (const auto& in : inputs) {
    if (const auto* v = std::get_if<std::vector<std::int64_t>>(&in)) c.n = static_cast<std::uint32_t>(v->size());
    else if (const auto* f = std::get_if<std::vector<Fixed>>(&in)) c.n = static_cast<std::uint32_t>(f->size());
    else continue;
    return;
  }
}

int cmd_run(const Options& o) {
  SessionConfig c = session_config(o);
  std::vector<std::string> args = o.inputs;
  if (c.protocol == ProtocolId::sip1 || c.protocol == ProtocolId::sip2)
    if (args.size() == 2) args.push_back("-");
  if (args.size() != c.parties)
    fail(kConfig, "config",
         std::to_string(c.parties) + " parties need " + std::to_string(c.parties) +
             " --input values, got " + std::to_string(args.size()));
  std::vector<PartyInput> inputs;
  for (std::size_t i = 0; i < args.size(); ++i)
    inputs.push_back(parse_party_input(c, static_cast<PartyId>(i + 1), args[i], o.bound));
  if (o.n == 0) fill_length(c, inputs);
  const auto r = run_local(c, inputs);
  const json j = session_json(r);
  std::cout << j.dump(2) << "\n";
  if (!o.output.empty()) {
    r.transcript.save(o.output);
    write_text(fs::path(o.output) / "report.json", j.dump(2) + "\n");
  }
  return kOk;
}

std::map<PartyId, Endpoint> parse_peers(const std::string& text) {
  std::map<PartyId, Endpoint> out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(kConfig, "config", "peer '" + item + "' is not id=host:port");
    int id = 0;
    try {
      id = std::stoi(item.substr(0, eq));
    } catch (const std::exception&) {
      fail(kConfig, "config", "peer '" + item + "' has a bad party id");
    }
    if (id < 1 || id > 65535) fail(kConfig, "config", "peer '" + item + "' has a bad party id");
    out[static_cast<PartyId>(id)] = parse_endpoint(item.substr(eq + 1));
  }
  return out;
}

int cmd_party(const Options& o) {
  SessionConfig c = session_config(o);
  if (o.party == 0 || o.party > c.parties)
    fail(kConfig, "config", "--id must name a party in 1.." + std::to_string(c.parties));
  if (!c.seed && o.session.empty())
    fail(kConfig, "config", "socket parties need a shared --seed or --session");
  auto endpoints = parse_peers(o.peers);
  if (!o.listen.empty()) endpoints[o.party] = parse_endpoint(o.listen);
  for (PartyId i = 1; i <= c.parties; ++i)
    if (!endpoints.count(i)) fail(kConfig, "config", "no endpoint for party " + std::to_string(i));
  const std::string arg = o.inputs.empty() ? std::string() : o.inputs.front();
  const PartyInput input = parse_party_input(c, o.party, arg, o.bound);
  if (o.n == 0) fill_length(c, {input});
  c.validated();
  validate_input(c, o.party, input);
  const auto r = run_sockets(c, o.party, input, endpoints);
  json j = session_json(r);
  j["party"] = o.party;
  std::cout << j.dump(2) << "\n";
  if (!o.output.empty()) {
    r.transcript.save(o.output);
    write_text(fs::path(o.output) / "report.json", j.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  std::string verify_dir;
  CLI::App app{"Secure multi-party aggregation of financial risk statistics"};
  app.require_subcommand(1);
  app.footer(
      "The scale bound B (--bound) divides every input before aggregation so values lie in\n"
      "[0, 1]. B is disclosed to every party; choosing it is a governance decision for the\n"
      "participating institutions, not a technical default.\n"
      "Exit codes: 0 ok, 2 config, 3 protocol abort, 4 verification failure.");

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Deterministic master seed")->envname("MPC_RISKAGG_SEED");
  };
  auto output_opt = [&](CLI::App* sub, const std::string& what) {
    sub->add_option("--output", o.output, what);
  };

  auto* sum = app.add_subcommand("sum", "Per-date secure sum of party series");
  sum->add_option("--input", o.inputs, "One date,value CSV per party")->required();
  sum->add_option("--bound", o.bound, "Public scale bound B");
  seed_opt(sum);
  output_opt(sum, "Directory for aggregate.csv, result.json and transcripts");

  auto* hhi = app.add_subcommand("herfindahl", "Per-date Herfindahl index of party exposures");
  hhi->add_option("--input", o.inputs, "One date,value CSV per party")->required();
  hhi->add_option("--bound", o.bound, "Public scale bound B");
  seed_opt(hhi);
  output_opt(hhi, "Directory for hhi.csv, result.json and transcripts");

  auto* corr = app.add_subcommand("correlation", "Secure sample correlation of two series");
  corr->add_option("--input", o.inputs, "Two date,value CSVs")->required();
  corr->add_option("--q", o.q, "Odd quantization alphabet size (default 65537)");
  corr->add_option("--protocol", o.protocol, "Inner product backend: sip1 or sip3");
  corr->add_option("--rsa-bits", o.rsa_bits, "RSA modulus size for sip3 (default 512)");
  o.protocol = "sip1";
  seed_opt(corr);
  output_opt(corr, "Directory for result.json and transcripts");

  auto* demo = app.add_subcommand("demo-bhc", "Three-bank demo on the bundled synthetic series");
  demo->add_option("--input", o.inputs, "Directory with bank1.csv..bank3.csv (default data/bhc)");
  demo->add_option("--bound", o.bound, "Public scale bound B (default 1000)");
  seed_opt(demo);
  output_opt(demo, "Directory for the three panel CSVs (default bhc-demo)");

  auto* views = app.add_subcommand("views", "Sample published Secure-Sum values and test uniformity");
  views->add_option("--m", o.m, "Number of parties");
  views->add_option("--trials", o.trials, "Number of sessions");
  views->add_option("--values", o.values, "Comma-separated fixed inputs");
  views->add_option("--alpha", o.alpha, "Significance level");
  views->add_flag("--biased", o.biased, "Draw masks from a deliberately biased source");
  seed_opt(views);
  output_opt(views, "CSV path for the samples (stdout when omitted)");

  auto* verify = app.add_subcommand("verify", "Replay and check a saved transcript");
  verify->add_option("dir", verify_dir, "Transcript directory")->required();

  auto session_opts = [&](CLI::App* sub) {
    sub->add_option("--protocol", o.protocol, "sum, sip1, sip2 or sip3");
    sub->add_option("--m", o.m, "Number of parties (sum)");
    sub->add_option("--n", o.n, "Vector length (defaults to the input length)");
    sub->add_option("--q", o.q, "Code alphabet size (sip1, sip3)");
    sub->add_option("--p", o.p, "Prime modulus (sip1)");
    sub->add_option("--tau", o.tau, "Share modulus (sip2)");
    sub->add_option("--bound", o.bound, "Public scale bound B for real inputs");
    sub->add_option("--rsa-bits", o.rsa_bits, "RSA modulus size (sip3)");
    sub->add_option("--session", o.session, "Session id as 32 hex digits");
    seed_opt(sub);
  };

  auto* run = app.add_subcommand("run", "Run one session with every party in this process");
  session_opts(run);
  run->add_option("--input", o.inputs, "Per-party input: value, list or file; '-' for the helper")
      ->required();
  output_opt(run, "Transcript directory");

  auto* party = app.add_subcommand("party", "Run one party over TCP");
  session_opts(party);
  party->add_option("--id", o.party, "This party's id")->required();
  party->add_option("--listen", o.listen, "host:port to listen on (overrides --peers entry)");
  party->add_option("--peers", o.peers, "id=host:port,... for every party")->required();
  party->add_option("--input", o.inputs, "This party's input: value, list or file")->expected(0, 1);
  output_opt(party, "Directory for this party's partial transcript");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      fail(kConfig, "usage", e.what());
    }
    if (*sum) return cmd_sum(o);
    if (*hhi) return cmd_herfindahl(o);
    if (*corr) return cmd_correlation(o);
    if (*demo) return cmd_demo_bhc(o);
    if (*views) return cmd_views(o);
    if (*verify) return cmd_verify(verify_dir);
    if (*run) return cmd_run(o);
    if (*party) return cmd_party(o);
    return kConfig;
  } catch (const Failure& f) {
    report(f);
    return f.code;
  } catch (const VerificationError& e) {
    report({kVerify, "verification", e.what(), e.index()});
    return kVerify;
  } catch (const ProtocolError& e) {
    report({kProtocol, "protocol", e.what(), std::nullopt});
    return kProtocol;
  } catch (const WireError& e) {
    report({kProtocol, "wire", e.what(), std::nullopt});
    return kProtocol;
  } catch (const ConfigError& e) {
    report({kConfig, "config", e.what(), std::nullopt});
    return kConfig;
  } catch (const RangeError& e) {
    report({kConfig, "range", e.what(), std::nullopt});
    return kConfig;
  } catch (const Error& e) {
    report({kProtocol, "error", e.what(), std::nullopt});
    return kProtocol;
  } catch (const std::exception& e) {
    report({kProtocol, "internal", e.what(), std::nullopt});
    return kProtocol;
  }
}
