#include <algorithm>
#include <fstream>
#include <sstream>

#include "riskagg/harness.hpp"

namespace riskagg {

using nlohmann::json;

namespace {

std::string u128_str(u128 v) { return detail::from_u128(v).str(); }

u128 u128_parse(const std::string& s) {
  BigInt v;
  try {
    v = BigInt(s);
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + s + "' in transcript");
  }
  if (v < 0) throw ConfigError("negative raw value in transcript");
  return static_cast<u128>(detail::to_i128(v));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

json parse_json(const std::filesystem::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw ConfigError(p.filename().string() + ": " + e.what());
  }
}

Bytes unhex(std::string_view text) {
  if (text.size() % 2 != 0) throw ConfigError("odd-length hex string");
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto nibble = [&](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw ConfigError("bad hex digit");
    };
    out[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
  }
  return out;
}

SessionResult result_from_json(const json& j) {
  SessionResult r;
  r.protocol = parse_protocol(j.at("protocol").get<std::string>());
  r.exactness = j.at("exactness").get<std::string>() == "exact" ? Exactness::exact
                                                                 : Exactness::fixed_point;
  if (j.contains("raw"))
    r.value = Fixed::from_raw(u128_parse(j.at("raw").get<std::string>()));
  else
    r.value = j.at("integer").get<std::int64_t>();
  return r;
}

json views_to_json(const std::map<PartyId, PartyView>& views) {
  json out = json::object();
  for (const auto& [id, v] : views) {
    json entries = json::array();
    for (const auto& e : v.entries)
      entries.push_back({{"round", e.round},
                         {"kind", to_string(e.kind)},
                         {"label", e.label},
                         {"value", hex(e.value)},
                         {"projection", e.projection}});
    out[std::to_string(id)] = entries;
  }
  return out;
}

ViewKind parse_kind(const std::string& s) {
  for (auto k : {ViewKind::input, ViewKind::generated, ViewKind::sent, ViewKind::received,
                 ViewKind::output})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown view entry kind '" + s + "'");
}

std::map<PartyId, PartyView> views_from_json(const json& j) {
  std::map<PartyId, PartyView> out;
  for (const auto& [key, entries] : j.items()) {
    PartyView v;
    v.party = static_cast<PartyId>(std::stoul(key));
    for (const auto& e : entries)
      v.entries.push_back({e.at("round").get<std::uint16_t>(), parse_kind(e.at("kind")),
                           e.at("label").get<std::string>(),
                           unhex(e.at("value").get<std::string>()),
                           e.at("projection").get<double>()});
    out.emplace(v.party, std::move(v));
  }
  return out;
}

}  // namespace

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

SessionId parse_session_id(std::string_view hex_text) {
  const Bytes b = unhex(hex_text);
  if (b.size() != 16) throw ConfigError("session id must be 32 hex digits");
  SessionId id;
  std::copy(b.begin(), b.end(), id.begin());
  return id;
}

json config_to_json(const SessionConfig& c) {
  json j = {{"schema_version", kSchemaVersion},
            {"protocol", protocol_name(c.protocol)},
            {"parties", c.parties},
            {"n", c.n},
            {"q", c.q},
            {"p", c.p},
            {"tau", c.tau},
            {"signed_codes", c.signed_codes},
            {"rsa_bits", c.rsa_bits},
            {"ot_mode", c.ot_mode == OtMode::raw ? "raw" : "padded"},
            {"session", hex(c.session)}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

SessionConfig config_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw ConfigError("unsupported transcript schema version");
    SessionConfig c;
    c.protocol = parse_protocol(j.at("protocol").get<std::string>());
    c.parties = j.at("parties").get<std::uint16_t>();
    c.n = j.at("n").get<std::uint32_t>();
    c.q = j.at("q").get<std::uint64_t>();
    c.p = j.at("p").get<std::uint64_t>();
    c.tau = j.at("tau").get<std::uint64_t>();
    c.signed_codes = j.at("signed_codes").get<bool>();
    c.rsa_bits = j.at("rsa_bits").get<unsigned>();
    c.ot_mode = j.at("ot_mode").get<std::string>() == "padded" ? OtMode::padded : OtMode::raw;
    if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    c.session = parse_session_id(j.at("session").get<std::string>());
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config.json: ") + e.what());
  }
}

json input_to_json(const PartyInput& in) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return {{"kind", "none"}};
        } else if constexpr (std::is_same_v<T, Fixed>) {
          return {{"kind", "scalar"}, {"raw", u128_str(v.raw())}, {"value", v.to_double()}};
        } else if constexpr (std::is_same_v<T, std::vector<Fixed>>) {
          json raw = json::array();
          for (const auto& x : v) raw.push_back(u128_str(x.raw()));
          return {{"kind", "reals"}, {"raw", raw}};
        } else {
          return {{"kind", "codes"}, {"values", v}};
        }
      },
      in);
}

PartyInput input_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return std::monostate{};
  if (kind == "scalar") return Fixed::from_raw(u128_parse(j.at("raw").get<std::string>()));
  if (kind == "reals") {
    std::vector<Fixed> out;
    for (const auto& r : j.at("raw")) out.push_back(Fixed::from_raw(u128_parse(r.get<std::string>())));
    return out;
  }
  if (kind == "codes") return j.at("values").get<std::vector<std::int64_t>>();
  throw ConfigError("unknown input kind '" + kind + "'");
}

json result_to_json(const SessionResult& r) {
  json j = {{"protocol", protocol_name(r.protocol)},
            {"exactness", r.exactness == Exactness::exact ? "exact" : "fixed_point"},
            {"value", r.to_string()},
            {"value_double", r.as_double()}};
  if (const auto* f = std::get_if<Fixed>(&r.value))
    j["raw"] = u128_str(f->raw());
  else
    j["integer"] = std::get<std::int64_t>(r.value);
  return j;
}

std::array<std::uint8_t, 32> config_hash(const SessionConfig& c) {
  const std::string s = config_to_json(c).dump();
  return hash256(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void Transcript::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / "config.json", config_to_json(config).dump(2) + "\n");
  json in = json::object();
  for (const auto& [id, v] : inputs) in[std::to_string(id)] = input_to_json(v);
  write_file(dir / "inputs.json", in.dump(2) + "\n");
  const Bytes log = encode_log(envelopes);
  write_file(dir / "envelopes.bin",
             std::string_view(reinterpret_cast<const char*>(log.data()), log.size()));
  json res = json::object();
  if (result) res = result_to_json(*result);
  res["rounds"] = rounds();
  res["declared_rounds"] = declared_rounds(config.protocol);
  res["warnings"] = warnings;
  write_file(dir / "result.json", res.dump(2) + "\n");
  write_file(dir / "views.json", views_to_json(views).dump(2) + "\n");
  json tj = json::array();
  for (const auto& r : timing) tj.push_back({{"round", r.round}, {"seconds", r.seconds}});
  write_file(dir / "timing.json", tj.dump(2) + "\n");
}

Transcript Transcript::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("no transcript at " + dir.string());
  Transcript t;
  t.config = config_from_json(parse_json(dir / "config.json"));
  if (std::filesystem::exists(dir / "inputs.json")) {
    const json inputs = parse_json(dir / "inputs.json");
    for (const auto& [key, v] : inputs.items())
      t.inputs.emplace(static_cast<PartyId>(std::stoul(key)), input_from_json(v));
  }
  const std::string log = read_file(dir / "envelopes.bin");
  t.envelopes = decode_log(std::span(reinterpret_cast<const std::uint8_t*>(log.data()), log.size()));
  const json res = parse_json(dir / "result.json");
  if (res.contains("protocol")) t.result = result_from_json(res);
  if (res.contains("warnings")) t.warnings = res.at("warnings").get<std::vector<std::string>>();
  if (std::filesystem::exists(dir / "views.json")) t.views = views_from_json(parse_json(dir / "views.json"));
  if (std::filesystem::exists(dir / "timing.json")) {
    const json timing = parse_json(dir / "timing.json");
    for (const auto& r : timing)
      t.timing.push_back({r.at("round").get<std::uint16_t>(), r.at("seconds").get<double>()});
  }
  return t;
}

Transcript merge_transcripts(const std::vector<Transcript>& parts) {
  if (parts.empty()) throw ConfigError("nothing to merge");
  Transcript out;
  out.config = parts.front().config;
  const auto hash = config_hash(out.config);
  for (const auto& p : parts) {
    if (config_hash(p.config) != hash) throw ConfigError("config-hash mismatch between transcripts");
    out.inputs.insert(p.inputs.begin(), p.inputs.end());
    out.views.insert(p.views.begin(), p.views.end());
    for (const auto& w : p.warnings)
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end())
        out.warnings.push_back(w);
    if (p.result) {
      if (out.result && !(*out.result == *p.result))
        throw VerificationError("parties disagree on the output", 0);
      out.result = p.result;
    }
    for (const auto& r : p.timing) {
      auto it = std::find_if(out.timing.begin(), out.timing.end(),
                             [&](const RoundTiming& x) { return x.round == r.round; });
      if (it == out.timing.end())
        out.timing.push_back(r);
      else
        it->seconds = std::max(it->seconds, r.seconds);
    }
    for (const auto& e : p.envelopes) {
      auto it = std::find_if(out.envelopes.begin(), out.envelopes.end(),
                             [&](const Envelope& x) { return x.order_key() == e.order_key(); });
      if (it == out.envelopes.end())
        out.envelopes.push_back(e);
      else if (!(*it == e))
        throw VerificationError("endpoints recorded different payloads for one envelope", 0);
    }
  }
  std::sort(out.timing.begin(), out.timing.end(),
            [](const RoundTiming& a, const RoundTiming& b) { return a.round < b.round; });
  canonicalize(out.envelopes);
  return out;
}

VerifyReport verify_transcript(const Transcript& t) {
  VerifyReport r;
  const auto fail = [&](std::string msg, std::optional<std::size_t> index = std::nullopt) {
    r.ok = false;
    r.message = std::move(msg);
    r.divergent_index = index;
    return r;
  };
  if (!t.result) return fail("incomplete transcript: no result");
  const auto& log = t.envelopes;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].session != t.config.session) return fail("envelope from another session", i);
    if (!is_protocol_message(log[i].type)) return fail("control frame in the log", i);
    if (i > 0 && !(log[i - 1].order_key() < log[i].order_key()))
      return fail("envelopes out of canonical order or duplicated", i);
  }
  const std::uint16_t want = declared_rounds(t.config.protocol);
  if (t.rounds() != want)
    return fail("round count " + std::to_string(t.rounds()) + " != declared " + std::to_string(want));
  if (t.result->protocol != t.config.protocol) return fail("result protocol does not match config");

  if (!t.config.seed || t.inputs.size() != t.config.parties) {
    r.ok = true;
    r.message = "structural checks passed; no seed or inputs recorded, replay skipped";
    return r;
  }
  std::vector<PartyInput> inputs;
  for (PartyId i = 1; i <= t.config.parties; ++i) {
    const auto it = t.inputs.find(i);
    if (it == t.inputs.end()) return fail("missing input for party " + std::to_string(i));
    inputs.push_back(it->second);
  }
  RunOutcome replay;
  try {
    replay = run_local(t.config, inputs);
  } catch (const Error& e) {
    return fail(std::string("replay aborted: ") + e.what());
  }
  r.replayed = true;
  const auto& again = replay.transcript.envelopes;
  const std::size_t common = std::min(again.size(), log.size());
  for (std::size_t i = 0; i < common; ++i)
    if (!(again[i] == log[i])) return fail("replay diverges at envelope " + std::to_string(i), i);
  if (again.size() != log.size())
    return fail("replay produced " + std::to_string(again.size()) + " envelopes, log has " +
                    std::to_string(log.size()),
                common);
  if (!(replay.result == *t.result)) return fail("replayed result differs from the recorded one");
  r.ok = true;
  r.message = "replay reproduced every envelope and the result";
  return r;
}

const std::map<PartyId, PartyView>& views(const Transcript& t) {
  if (!t.result || t.views.empty()) throw ProtocolError("session incomplete: no views recorded");
  return t.views;
}

}  // namespace riskagg
