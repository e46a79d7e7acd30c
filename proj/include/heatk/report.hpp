#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "heatk/errors.hpp"
#include "heatk/estimates.hpp"
#include "heatk/heat_kernel.hpp"
#include "heatk/spectral.hpp"

namespace heatk {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct KernelRow {
  double t;
  VertexId x;
  VertexId y;
  double p;
  double truncation_error;
  std::string domain_tag;
};

/// Rows of a kernel field, one per support vertex.
inline std::vector<KernelRow> kernel_rows(const HeatKernelField& f) {
  std::vector<KernelRow> rows;
  f.values.for_each([&](VertexId y, double p) { rows.push_back({f.t, f.source, y, p, f.truncation_error, f.domain_tag}); });
  return rows;
}

inline void write_kernel_csv(std::ostream& os, std::vector<KernelRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const KernelRow& a, const KernelRow& b) { return std::tie(a.t, a.x, a.y) < std::tie(b.t, b.x, b.y); });
  os << "t,x,y,p,truncation_error,domain_tag\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << ',' << r.x << ',' << r.y << ',' << format_double(r.p) << ','
       << format_double(r.truncation_error) << ',' << csv_field(r.domain_tag) << '\n';
  }
}

inline void write_spectral_csv(std::ostream& os, const std::vector<SpectralBottom>& rows) {
  os << "domain_tag,lambda,residual,iterations\n";
  for (const auto& r : rows) {
    os << csv_field(r.domain_tag) << ',' << format_double(r.lambda) << ',' << format_double(r.residual) << ','
       << r.iterations << '\n';
  }
}

inline std::string parameters_json(const std::map<std::string, double>& params) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : params) {
    if (!first) out += ',';
    first = false;
    out += nlohmann::json(k).dump() + ':';
    out += std::isfinite(v) ? format_double(v) : nlohmann::json(format_double(v)).dump();
  }
  return out + '}';
}

inline void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& rows) {
  os << "theorem,instance,true_value,bound_value,slack,passed,lambda_mode,parameters\n";
  for (const auto& r : rows) {
    os << csv_field(r.theorem) << ',' << csv_field(r.instance) << ',' << format_double(r.true_value) << ','
       << format_double(r.bound_value) << ',' << format_double(r.slack) << ',' << (r.passed ? "true" : "false") << ','
       << to_string(r.lambda_mode) << ',' << csv_field(parameters_json(r.parameters)) << '\n';
  }
}

struct TheoremSummary {
  std::size_t passed = 0;
  std::size_t failed = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::string worst_instance;
};

/// Pass/fail counts and worst slack per theorem label, in label order.
inline std::map<std::string, TheoremSummary> summarize(const std::vector<BoundReport>& rows) {
  std::map<std::string, TheoremSummary> out;
  for (const auto& r : rows) {
    auto& s = out[r.theorem];
    (r.passed ? s.passed : s.failed) += 1;
    if (r.slack < s.worst_slack) {
      s.worst_slack = r.slack;
      s.worst_instance = r.instance;
    }
  }
  return out;
}

inline nlohmann::ordered_json summary_json(const std::vector<BoundReport>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  std::size_t passed = 0, failed = 0;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [name, s] : summarize(rows)) {
    per[name] = {{"passed", s.passed},
                 {"failed", s.failed},
                 {"worst_slack", s.worst_slack},
                 {"worst_instance", s.worst_instance}};
    passed += s.passed;
    failed += s.failed;
  }
  j["passed"] = passed;
  j["failed"] = failed;
  j["theorems"] = std::move(per);
  return j;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path);
  return os;
}

}  // namespace heatk
