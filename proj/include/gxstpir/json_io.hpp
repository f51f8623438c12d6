#pragma once

// JSON documents: storage patterns in, capacity reports out.
//
// Pattern document:
//   { "n_servers": 5, "x": 0, "t": 1, "q": 11,
//     "message_sets": [ { "count": 2, "servers": [1, 3, 4] }, ... ] }
// "x", "t" default to 0 and 1, "q" is optional, "count" defaults to 1.
// Unknown keys are ignored so fixtures can carry their expected reports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gxstpir/capacity.hpp"
#include "gxstpir/error.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/rational.hpp"

namespace gxstpir::json_io {

using nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  enforce(in.good(), ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  enforce(out.good(), ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  enforce(out.good(), ErrorCode::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Field accessors that report the offending location

inline const json& member(const json& obj, const std::string& key, const std::string& path) {
  enforce(obj.is_object(), ErrorCode::Parse, path + ": expected an object");
  auto it = obj.find(key);
  enforce(it != obj.end(), ErrorCode::Parse, path + "." + key + ": missing");
  return *it;
}

inline std::int64_t as_int(const json& j, const std::string& path) {
  enforce(j.is_number_integer(), ErrorCode::Parse, path + ": expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t as_uint64(const json& j, const std::string& path) {
  if (j.is_string()) {
    // 64-bit seeds may arrive as decimal strings.
    try {
      std::size_t used = 0;
      auto v = std::stoull(j.get<std::string>(), &used);
      enforce(used == j.get<std::string>().size(), ErrorCode::Parse,
              path + ": expected an unsigned integer");
      return v;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, path + ": expected an unsigned integer");
    }
  }
  enforce(j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0),
          ErrorCode::Parse, path + ": expected an unsigned integer");
  return j.get<std::uint64_t>();
}

inline int optional_int(const json& obj, const std::string& key, int fallback,
                        const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return static_cast<int>(as_int(*it, path + "." + key));
}

inline std::vector<int> as_int_list(const json& j, const std::string& path) {
  enforce(j.is_array(), ErrorCode::Parse, path + ": expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(static_cast<int>(as_int(j[i], path + "[" + std::to_string(i) + "]")));
  return out;
}

// ---------------------------------------------------------------------------
// Patterns

struct PatternDoc {
  model::StoragePattern pattern;
  int x = 0;
  int t = 1;
  std::optional<std::uint64_t> q;
};

inline model::RawPattern parse_raw_pattern(const json& j, const std::string& path = "$") {
  model::RawPattern raw;
  raw.n_servers = static_cast<int>(as_int(member(j, "n_servers", path), path + ".n_servers"));
  const auto& sets = member(j, "message_sets", path);
  const std::string sets_path = path + ".message_sets";
  enforce(sets.is_array(), ErrorCode::Parse, sets_path + ": expected an array");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string p = sets_path + "[" + std::to_string(i) + "]";
    model::MessageSet ms;
    ms.count = optional_int(sets[i], "count", 1, p);
    ms.servers = as_int_list(member(sets[i], "servers", p), p + ".servers");
    raw.message_sets.push_back(std::move(ms));
  }
  return raw;
}

inline PatternDoc parse_pattern_doc(const json& j, const std::string& path = "$") {
  PatternDoc doc{model::validate(parse_raw_pattern(j, path)), 0, 1, std::nullopt};
  doc.x = optional_int(j, "x", 0, path);
  doc.t = optional_int(j, "t", 1, path);
  enforce(doc.x >= 0, ErrorCode::InvalidArgument, path + ".x: must be >= 0");
  enforce(doc.t >= 0, ErrorCode::InvalidArgument, path + ".t: must be >= 0");
  if (auto it = j.find("q"); it != j.end() && !it->is_null())
    doc.q = as_uint64(*it, path + ".q");
  return doc;
}

inline PatternDoc load_pattern(const std::filesystem::path& file) {
  return parse_pattern_doc(read_json_file(file));
}

inline json pattern_to_json(const model::StoragePattern& p) {
  json sets = json::array();
  for (const auto& ms : p.sets())
    sets.push_back({{"count", ms.count}, {"servers", ms.servers}});
  return {{"n_servers", p.n_servers()}, {"message_sets", sets}};
}

inline json pattern_doc_to_json(const PatternDoc& doc) {
  json j = pattern_to_json(doc.pattern);
  j["x"] = doc.x;
  j["t"] = doc.t;
  if (doc.q) j["q"] = *doc.q;
  return j;
}

// ---------------------------------------------------------------------------
// Capacity reports

inline json rational_list(const std::vector<Rational>& v) {
  json out = json::array();
  for (const auto& r : v) out.push_back(to_string(r));
  return out;
}

inline json capacity_to_json(const capacity::CapacityReport& r) {
  json cert;
  cert["direct_lower"] = to_string(r.direct_lower);
  cert["d_star"] = r.d_star ? json(to_string(*r.d_star)) : json(nullptr);
  cert["fractional_matching_number"] =
      r.fractional_matching ? json(to_string(*r.fractional_matching)) : json(nullptr);
  cert["b_cover"] = r.b_cover ? json{{"b", r.b_cover->b},
                                     {"message_sets", r.b_cover->message_sets}}
                              : json(nullptr);
  cert["b_cover_certifies"] = r.b_cover_certifies;
  if (r.theorem3) {
    const auto& c = *r.theorem3;
    cert["theorem3"] = {{"capacity", to_string(c.capacity)},
                        {"nu2", c.nu2},
                        {"stable_set", c.stable_set},
                        {"t2_servers", c.t2_servers},
                        {"t1_servers", c.t1_servers}};
  } else {
    cert["theorem3"] = nullptr;
  }
  cert["over_replicated_message_sets"] = r.over_replicated_sets;
  cert["elimination_exhaustive"] = r.elimination_exhaustive;
  return {{"lower", to_string(r.lower)},
          {"upper", to_string(r.upper)},
          {"matched", r.matched},
          {"lower_method", capacity::to_string(r.lower_method)},
          {"lower_witness", r.lower_witness},
          {"upper_witness", rational_list(r.upper_witness)},
          {"certificates", cert},
          {"notes", r.notes}};
}

}  // namespace gxstpir::json_io
