#pragma once

// CSV and JSON plumbing shared by the CLI, the store and the service.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fracsls/types.hpp"

namespace fracsls {

using json = nlohmann::json;

inline void to_json(json& j, const ModelParams& p) {
  j = json{{"k0", p.k0}, {"k1", p.k1}, {"b1", p.b1}, {"alpha", p.alpha}};
}

inline void from_json(const json& j, ModelParams& p) {
  j.at("k0").get_to(p.k0);
  j.at("k1").get_to(p.k1);
  j.at("b1").get_to(p.b1);
  j.at("alpha").get_to(p.alpha);
}

/// Decimal text that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const TimeSeries& s) {
  std::string out = "t,value\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += format_double(s.time(k));
    out += ',';
    out += format_double(s.values[k]);
    out += '\n';
  }
  return out;
}

/// Parses `t,value` CSV. The sample time is taken from the first two rows
/// (a single-row file needs `fallback_sample_time`).
inline TimeSeries time_series_from_csv(const std::string& text, SignalRole role,
                                       double fallback_sample_time = 0.0) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,value", 0) != 0)
    throw InvalidArgument("time series CSV must start with header 't,value'");
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("malformed CSV row: " + line);
    try {
      t.push_back(std::stod(line.substr(0, comma)));
      v.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed CSV row: " + line);
    }
  }
  TimeSeries s;
  s.role = role;
  s.values = std::move(v);
  s.sample_time = t.size() >= 2 ? t[1] - t[0] : fallback_sample_time;
  validate(s);
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fracsls
