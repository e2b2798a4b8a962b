#include "imdp/results_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "imdp/errors.hpp"

namespace imdp::exp {

namespace {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("bad number '" + s + "' in results file");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("bad integer '" + s + "' in results file");
  return v;
}

// Fields never contain commas or quotes except team names given by users;
// quote everything that needs it.
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  return out + "\n";
}

}  // namespace

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"condition_id", "task",       "team",       "mode",
                                             "n_g",          "mean_interventions", "episodes", "goals",
                                             "collisions",   "timeouts",   "mean_length", "config_hash"};
  return cols;
}

std::string config_hash(const ExperimentConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j["evaluation"].erase("jobs");
  const std::string doc = j.dump();
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(doc.data(), doc.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xf];
  }
  return hex;
}

std::string results_to_csv(const ResultsTable& table) {
  std::string out = join(result_columns());
  for (const auto& r : table) {
    out += join({r.condition_id, r.task, r.team, r.mode, format_double(r.n_g), format_double(r.mean_interventions),
                 std::to_string(r.episodes), std::to_string(r.goals), std::to_string(r.collisions),
                 std::to_string(r.timeouts), format_double(r.mean_length), r.config_hash});
  }
  return out;
}

ResultsTable results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_row(line) != result_columns()) {
    throw IoError("results header does not match the documented columns");
  }
  ResultsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != result_columns().size()) throw IoError("results row has " + std::to_string(f.size()) + " fields");
    ConditionResult r;
    r.condition_id = f[0];
    r.task = f[1];
    r.team = f[2];
    r.mode = f[3];
    r.n_g = parse_double(f[4]);
    r.mean_interventions = parse_double(f[5]);
    r.episodes = parse_int(f[6]);
    r.goals = parse_int(f[7]);
    r.collisions = parse_int(f[8]);
    r.timeouts = parse_int(f[9]);
    r.mean_length = parse_double(f[10]);
    r.config_hash = f[11];
    table.push_back(std::move(r));
  }
  return table;
}

std::string results_to_long_csv(const ResultsTable& table) {
  std::string out = join({"condition_id", "task", "team", "mode", "metric", "value"});
  for (const auto& r : table) {
    const std::vector<std::pair<std::string, std::string>> metrics{
        {"n_g", format_double(r.n_g)},
        {"mean_interventions", format_double(r.mean_interventions)},
        {"goals", std::to_string(r.goals)},
        {"collisions", std::to_string(r.collisions)},
        {"timeouts", std::to_string(r.timeouts)},
        {"mean_length", format_double(r.mean_length)}};
    for (const auto& [name, value] : metrics) out += join({r.condition_id, r.task, r.team, r.mode, name, value});
  }
  return out;
}

nlohmann::json sidecar(const ExperimentConfig& cfg, const ResultsTable& table, const std::string& command) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table) {
    rows.push_back({{"condition_id", r.condition_id},
                    {"n_g", r.n_g},
                    {"mean_interventions", r.mean_interventions},
                    {"episodes", r.episodes},
                    {"histogram", {{"goal", r.goals}, {"collision", r.collisions}, {"timeout", r.timeouts}}}});
  }
  return {{"artifact", "imdp"},
          {"artifact_version", "1.0.0"},
          {"command", command},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.seed},
          {"columns", result_columns()},
          {"config", to_json(cfg)},
          {"results", rows}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace imdp::exp
