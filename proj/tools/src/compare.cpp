#include "compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csv.hpp"
#include "gossipfield/error.hpp"

namespace gossipfield::tools {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kListedDifferences = 50;
const std::set<std::string> kKeyColumns = {"node", "v", "w", "s", "t"};

[[noreturn]] void mismatch(const std::string& message) { throw Error(ErrorCode::kCliSchemaMismatch, message); }

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw Error(ErrorCode::kCliIo, "no manifest.json in " + dir.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kCliIo, (dir / "manifest.json").string() + " is not valid JSON: " + e.what());
  }
}

bool parse_double(const std::string& text, double& value) {
  if (text.empty()) return false;
  if (text == "nan") { value = std::nan(""); return true; }
  if (text == "inf") { value = HUGE_VAL; return true; }
  if (text == "-inf") { value = -HUGE_VAL; return true; }
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

struct Comparison {
  double tolerance;
  json differences = json::array();
  std::size_t difference_count = 0;
  double max_deviation = 0.0;

  void record(json entry) {
    ++difference_count;
    if (differences.size() < kListedDifferences) differences.push_back(std::move(entry));
  }

  void numbers(double a, double b, double sigma, json where, double& max_abs, double& max_z) {
    if (std::isnan(a) && std::isnan(b)) return;
    const double deviation = a == b ? 0.0 : std::abs(a - b);
    if (std::isnan(deviation)) {
      record({{"where", where}, {"a", format_number(a)}, {"b", format_number(b)}});
      return;
    }
    max_abs = std::max(max_abs, deviation);
    max_deviation = std::max(max_deviation, deviation);
    const bool has_sigma = sigma > 0.0;
    if (has_sigma) max_z = std::max(max_z, deviation / sigma);
    if (deviation > tolerance && (!has_sigma || deviation > 3.0 * sigma)) {
      where["a"] = a;
      where["b"] = b;
      where["deviation"] = deviation;
      if (has_sigma) where["sigma"] = sigma;
      record(std::move(where));
    }
  }
};

std::string row_key(const CsvTable& table, const std::vector<int>& keys, std::size_t row) {
  if (keys.empty()) return std::to_string(row);
  std::string key;
  for (int k : keys) key += table.rows[row][static_cast<std::size_t>(k)] + "\x1f";
  return key;
}

json compare_csv(const fs::path& a_path, const fs::path& b_path, const std::string& label, Comparison& cmp) {
  const CsvTable a = read_csv(a_path);
  const CsvTable b = read_csv(b_path);
  std::vector<int> keys_a;
  std::vector<int> keys_b;
  for (std::size_t i = 0; i < a.header.size(); ++i) {
    if (kKeyColumns.count(a.header[i])) {
      const int j = b.column(a.header[i]);
      if (j < 0) mismatch(label + ": key column '" + a.header[i] + "' missing from " + b_path.string());
      keys_a.push_back(static_cast<int>(i));
      keys_b.push_back(j);
    }
  }
  for (const auto& name : b.header) {
    if (kKeyColumns.count(name) && a.column(name) < 0) {
      mismatch(label + ": key column '" + name + "' missing from " + a_path.string());
    }
  }
  if (a.rows.size() != b.rows.size()) {
    mismatch(label + ": " + std::to_string(a.rows.size()) + " rows vs " + std::to_string(b.rows.size()));
  }
  std::map<std::string, std::size_t> b_rows;
  for (std::size_t r = 0; r < b.rows.size(); ++r) b_rows[row_key(b, keys_b, r)] = r;

  auto is_value = [](const std::string& name) {
    return !kKeyColumns.count(name) && !(name.size() > 3 && name.compare(name.size() - 3, 3, "_se") == 0);
  };
  json columns = json::object();
  json ignored = json::array();
  for (const auto& name : a.header) {
    if (!is_value(name)) continue;
    if (b.column(name) < 0) ignored.push_back(name);
  }
  for (const auto& name : b.header) {
    if (is_value(name) && a.column(name) < 0) ignored.push_back(name);
  }
  for (std::size_t c = 0; c < a.header.size(); ++c) {
    const std::string& name = a.header[c];
    if (!is_value(name)) continue;
    const int cb = b.column(name);
    if (cb < 0) continue;
    const int se_a = a.column(name + "_se");
    const int se_b = b.column(name + "_se");
    double max_abs = 0.0;
    double max_z = 0.0;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const std::string key = row_key(a, keys_a, r);
      const auto found = b_rows.find(key);
      if (found == b_rows.end()) mismatch(label + ": row " + std::to_string(r) + " has no counterpart");
      const auto& row_a = a.rows[r];
      const auto& row_b = b.rows[found->second];
      double va = 0.0;
      double vb = 0.0;
      json where = {{"output", label}, {"column", name}};
      if (!keys_a.empty()) where["row"] = row_a[static_cast<std::size_t>(keys_a[0])];
      else where["row"] = r;
      if (!parse_double(row_a[c], va) || !parse_double(row_b[static_cast<std::size_t>(cb)], vb)) {
        if (row_a[c] != row_b[static_cast<std::size_t>(cb)]) {
          where["a"] = row_a[c];
          where["b"] = row_b[static_cast<std::size_t>(cb)];
          cmp.record(std::move(where));
        }
        continue;
      }
      double var = 0.0;
      double s = 0.0;
      if (se_a >= 0 && parse_double(row_a[static_cast<std::size_t>(se_a)], s)) var += s * s;
      if (se_b >= 0 && parse_double(row_b[static_cast<std::size_t>(se_b)], s)) var += s * s;
      cmp.numbers(va, vb, std::sqrt(var), std::move(where), max_abs, max_z);
    }
    columns[name] = {{"max_abs_deviation", max_abs}};
    if (se_a >= 0 || se_b >= 0) columns[name]["max_z"] = max_z;
  }
  if (columns.empty()) mismatch(label + ": no value columns in common");
  return {{"columns", columns}, {"ignored_columns", ignored}};
}

void compare_json(const json& a, const json& b, const std::string& path, const std::string& label, Comparison& cmp,
                  double& max_abs) {
  if (a.is_number() && b.is_number()) {
    double unused = 0.0;
    cmp.numbers(a.get<double>(), b.get<double>(), 0.0, {{"output", label}, {"path", path}}, max_abs, unused);
    return;
  }
  if (a.type() != b.type() && !(a.is_null() || b.is_null())) mismatch(label + ": type differs at " + path);
  if (a.is_object()) {
    for (const auto& [key, value] : a.items()) {
      if (!b.contains(key)) mismatch(label + ": key '" + path + "/" + key + "' missing from the second run");
      compare_json(value, b[key], path + "/" + key, label, cmp, max_abs);
    }
    for (const auto& [key, value] : b.items()) {
      if (!a.contains(key)) mismatch(label + ": key '" + path + "/" + key + "' missing from the first run");
    }
  } else if (a.is_array()) {
    if (a.size() != b.size()) {
      cmp.record({{"output", label}, {"path", path}, {"a_length", a.size()}, {"b_length", b.size()}});
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      compare_json(a[i], b[i], path + "/" + std::to_string(i), label, cmp, max_abs);
    }
  } else if (a != b) {
    cmp.record({{"output", label}, {"path", path}, {"a", a}, {"b", b}});
  }
}

json compare_file(const fs::path& a, const fs::path& b, const std::string& label, Comparison& cmp) {
  if (a.extension() != b.extension()) mismatch(label + ": file types differ");
  if (a.extension() == ".csv") return compare_csv(a, b, label, cmp);
  if (a.extension() == ".json") {
    auto load = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw Error(ErrorCode::kCliIo, "cannot read " + p.string());
      return json::parse(in);
    };
    double max_abs = 0.0;
    compare_json(load(a), load(b), "", label, cmp, max_abs);
    return {{"max_abs_deviation", max_abs}};
  }
  // Text outputs (edge lists, event logs) must match exactly.
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::kCliIo, "cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  if (slurp(a) != slurp(b)) cmp.record({{"output", label}, {"text_differs", true}});
  return json::object();
}

}  // namespace

CompareResult compare_runs(const fs::path& dir_a, const fs::path& dir_b, double tolerance) {
  if (!(tolerance >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be non-negative");
  const json ma = read_manifest(dir_a);
  const json mb = read_manifest(dir_b);
  auto by_kind = [](const json& manifest) {
    std::map<std::string, std::vector<json>> kinds;
    if (!manifest.contains("outputs") || !manifest["outputs"].is_array()) mismatch("manifest has no outputs list");
    for (const auto& o : manifest["outputs"]) kinds[o.at("kind").get<std::string>()].push_back(o);
    return kinds;
  };
  const auto ka = by_kind(ma);
  const auto kb = by_kind(mb);

  Comparison cmp{tolerance};
  json matched = json::array();
  json unmatched_a = json::array();
  json unmatched_b = json::array();
  for (const auto& [kind, list] : ka) {
    const auto other = kb.find(kind);
    const std::size_t paired = other == kb.end() ? 0 : std::min(list.size(), other->second.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string file_a = list[i].at("file").get<std::string>();
      if (i >= paired) {
        unmatched_a.push_back(file_a);
        continue;
      }
      const std::string file_b = other->second[i].at("file").get<std::string>();
      const std::string label = file_a == file_b ? file_a : file_a + " vs " + file_b;
      json entry = compare_file(dir_a / file_a, dir_b / file_b, label, cmp);
      entry["kind"] = kind;
      entry["file_a"] = file_a;
      entry["file_b"] = file_b;
      matched.push_back(std::move(entry));
    }
  }
  for (const auto& [kind, list] : kb) {
    const auto other = ka.find(kind);
    const std::size_t paired = other == ka.end() ? 0 : std::min(list.size(), other->second.size());
    for (std::size_t i = paired; i < list.size(); ++i) unmatched_b.push_back(list[i].at("file"));
  }
  if (matched.empty()) mismatch("the two runs share no output kind");

  CompareResult result;
  result.report = {{"tolerance", tolerance},
                   {"matched", matched},
                   {"unmatched_a", unmatched_a},
                   {"unmatched_b", unmatched_b},
                   {"max_abs_deviation", cmp.max_deviation},
                   {"difference_count", cmp.difference_count},
                   {"differences", cmp.differences}};
  result.identical_within_tolerance = cmp.difference_count == 0;
  return result;
}

}  // namespace gossipfield::tools
