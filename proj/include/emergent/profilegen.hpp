#pragma once

// Seeded synthetic markets and their line-delimited file format:
//
//   {"meta": {"n": 3, "count": 4000, "seed": 7}}
//   {"n": 3, "prefs": [[2,0,1],[0,1,2],[1,2,0]]}
//   ...

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emergent/core.hpp"
#include "emergent/random.hpp"

namespace emergent {

struct Dataset {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<PreferenceProfile> profiles;

  std::size_t size() const { return profiles.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class Split { Train, Test };

/// Dataset sizes used for each market size: 4,000/400 up to n=4, 10,000/1,000 beyond.
inline std::size_t default_count(std::size_t n, Split split) {
  const bool small = n <= 4;
  if (split == Split::Train) return small ? 4000 : 10000;
  return small ? 400 : 1000;
}

/// Every row of every profile is an independent uniform permutation.
inline Dataset generate(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (n == 0) throw InputError("generate: n must be at least 1");
  if (count == 0) throw InputError("generate: count must be at least 1");
  Dataset d{n, seed, {}};
  d.profiles.reserve(count);
  Rng rng(seed);
  std::vector<std::vector<Item>> rows(n);
  for (std::size_t p = 0; p < count; ++p) {
    for (auto& row : rows) row = rng.permutation(n);
    d.profiles.emplace_back(rows);
  }
  return d;
}

inline std::string format_profile_record(const PreferenceProfile& profile) {
  std::ostringstream os;
  os << "{\"n\": " << profile.n() << ", \"prefs\": [";
  for (Agent a = 0; a < profile.n(); ++a) {
    if (a) os << ',';
    os << '[';
    for (std::size_t k = 0; k < profile.n(); ++k) {
      if (k) os << ',';
      os << profile.item_at(a, k);
    }
    os << ']';
  }
  os << "]}";
  return os.str();
}

inline std::string format_meta_record(const Dataset& d) {
  std::ostringstream os;
  os << "{\"meta\": {\"n\": " << d.n << ", \"count\": " << d.size() << ", \"seed\": " << d.seed
     << "}}";
  return os.str();
}

inline void save(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << format_meta_record(d) << '\n';
  for (const auto& p : d.profiles) out << format_profile_record(p) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

namespace detail {

inline PreferenceProfile parse_profile_record(const nlohmann::json& j, std::size_t line) {
  auto fail = [line](const std::string& what) {
    return FormatError("line " + std::to_string(line) + ": " + what);
  };
  if (!j.is_object() || !j.contains("n") || !j.contains("prefs")) {
    throw fail("expected a record with \"n\" and \"prefs\"");
  }
  if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0) {
    throw fail("\"n\" must be a positive integer");
  }
  const auto n = j["n"].get<std::size_t>();
  const auto& prefs = j["prefs"];
  if (!prefs.is_array() || prefs.size() != n) throw fail("\"prefs\" must hold n rows");
  std::vector<std::vector<Item>> rows;
  rows.reserve(n);
  for (const auto& row : prefs) {
    if (!row.is_array() || row.size() != n) throw fail("row length differs from n");
    std::vector<Item> r;
    for (const auto& v : row) {
      if (!v.is_number_unsigned()) throw fail("row is not a permutation");
      r.push_back(v.get<Item>());
    }
    if (!is_permutation_of_indices(std::span<const Item>(r))) throw fail("row is not a permutation");
    rows.push_back(std::move(r));
  }
  return PreferenceProfile(rows);
}

}  // namespace detail

/// Parses a dataset from a stream. The meta header is optional; when present
/// its n and count must agree with the records.
inline Dataset load_stream(std::istream& in) {
  Dataset d;
  bool have_meta = false;
  std::size_t declared_count = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("line " + std::to_string(line) + ": malformed record (" + e.what() + ")");
    }
    if (j.is_object() && j.contains("meta")) {
      if (have_meta || !d.profiles.empty()) {
        throw FormatError("line " + std::to_string(line) + ": meta record must come first");
      }
      const auto& m = j["meta"];
      try {
        d.n = m.at("n").get<std::size_t>();
        declared_count = m.at("count").get<std::size_t>();
        d.seed = m.value("seed", std::uint64_t{0});
      } catch (const nlohmann::json::exception&) {
        throw FormatError("line " + std::to_string(line) + ": malformed meta record");
      }
      have_meta = true;
      continue;
    }
    auto profile = detail::parse_profile_record(j, line);
    if (d.n == 0 && !have_meta) d.n = profile.n();
    if (profile.n() != d.n) {
      throw FormatError("line " + std::to_string(line) + ": inconsistent n (" +
                        std::to_string(profile.n()) + " vs " + std::to_string(d.n) + ")");
    }
    d.profiles.push_back(std::move(profile));
  }
  if (d.profiles.empty()) throw FormatError("empty dataset");
  if (have_meta && declared_count != d.profiles.size()) {
    throw FormatError("meta count " + std::to_string(declared_count) + " but file holds " +
                      std::to_string(d.profiles.size()) + " profiles");
  }
  return d;
}

inline Dataset load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset " + path);
  return load_stream(in);
}

}  // namespace emergent
