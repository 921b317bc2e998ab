#include "qnk/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace qnk {

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

// shortest representation that parses back to the same bits
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = 0;
  std::sscanf(buf, "%lf", &parsed);
  if (parsed == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &parsed);
      if (parsed == v) return shorter;
    }
  }
  return buf;
}

std::string opt_to_csv(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::optional<double> opt_from_csv(const std::string& field) {
  if (field.empty()) return std::nullopt;
  return std::stod(field);
}

}  // namespace

TraceFormat trace_format_from_string(const std::string& s) {
  if (s == "json") return TraceFormat::json;
  if (s == "csv") return TraceFormat::csv;
  throw std::invalid_argument("unknown trace format: " + s);
}

json trace_to_json(const TraceFile& trace) {
  json rows = json::array();
  for (const auto& r : trace.records) {
    rows.push_back(json{{"k", r.k},
                        {"res_norm", r.res_norm},
                        {"rel_res", r.rel_res},
                        {"q", r.q},
                        {"alpha", opt_to_json(r.alpha)},
                        {"curvature", opt_to_json(r.curvature)},
                        {"gamma", opt_to_json(r.gamma)},
                        {"u_kk", opt_to_json(r.u_kk)},
                        {"zeta", opt_to_json(r.zeta)}});
  }
  json header{{"method", trace.header.method},
              {"matrix", trace.header.matrix_name},
              {"n", trace.header.n},
              {"kappa_estimate", opt_to_json(trace.header.kappa_estimate)},
              {"config", trace.header.config_echo}};
  return json{{"header", header}, {"status", std::string(to_string(trace.status))}, {"rows", rows}};
}

TraceFile trace_from_json(const json& j) {
  TraceFile trace;
  const auto& header = j.at("header");
  trace.header.method = header.at("method").get<std::string>();
  trace.header.matrix_name = header.at("matrix").get<std::string>();
  trace.header.n = header.at("n").get<Index>();
  trace.header.kappa_estimate = opt_from_json(header.at("kappa_estimate"));
  trace.header.config_echo = header.at("config");
  const auto status = solve_status_from_string(j.at("status").get<std::string>());
  if (!status) throw std::runtime_error("trace: unknown status");
  trace.status = *status;
  for (const auto& row : j.at("rows")) {
    TraceRecord<double> r;
    r.k = row.at("k").get<int>();
    r.res_norm = row.at("res_norm").get<double>();
    r.rel_res = row.at("rel_res").get<double>();
    r.q = row.at("q").get<double>();
    r.alpha = opt_from_json(row.at("alpha"));
    r.curvature = opt_from_json(row.at("curvature"));
    r.gamma = opt_from_json(row.at("gamma"));
    r.u_kk = opt_from_json(row.at("u_kk"));
    r.zeta = opt_from_json(row.at("zeta"));
    trace.records.push_back(r);
  }
  return trace;
}

namespace {

void write_csv(const TraceFile& trace, std::ostream& out) {
  out << "# method=" << trace.header.method << "\n";
  out << "# matrix=" << trace.header.matrix_name << "\n";
  out << "# n=" << trace.header.n << "\n";
  out << "# kappa_estimate=" << opt_to_csv(trace.header.kappa_estimate) << "\n";
  out << "# config=" << trace.header.config_echo.dump() << "\n";
  out << "# status=" << to_string(trace.status) << "\n";
  out << "k,res_norm,rel_res,q,alpha,curvature,gamma,u_kk,zeta\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.res_norm) << ',' << format_double(r.rel_res) << ','
        << format_double(r.q) << ',' << opt_to_csv(r.alpha) << ',' << opt_to_csv(r.curvature)
        << ',' << opt_to_csv(r.gamma) << ',' << opt_to_csv(r.u_kk) << ',' << opt_to_csv(r.zeta)
        << "\n";
  }
}

TraceFile read_csv(std::istream& in, const std::string& path) {
  TraceFile trace;
  std::string line;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "method") trace.header.method = value;
      else if (key == "matrix") trace.header.matrix_name = value;
      else if (key == "n") trace.header.n = std::stol(value);
      else if (key == "kappa_estimate") trace.header.kappa_estimate = opt_from_csv(value);
      else if (key == "config") trace.header.config_echo = nlohmann::json::parse(value);
      else if (key == "status") {
        const auto status = solve_status_from_string(value);
        if (!status) throw std::runtime_error("trace csv: unknown status in " + path);
        trace.status = *status;
      }
      continue;
    }
    if (!saw_columns) {  // column header row
      saw_columns = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    while (fields.size() < 9) fields.emplace_back();
    TraceRecord<double> r;
    r.k = std::stoi(fields[0]);
    r.res_norm = std::stod(fields[1]);
    r.rel_res = std::stod(fields[2]);
    r.q = std::stod(fields[3]);
    r.alpha = opt_from_csv(fields[4]);
    r.curvature = opt_from_csv(fields[5]);
    r.gamma = opt_from_csv(fields[6]);
    r.u_kk = opt_from_csv(fields[7]);
    r.zeta = opt_from_csv(fields[8]);
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace

void export_trace(const TraceFile& trace, TraceFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_trace: cannot open " + path);
  if (format == TraceFormat::json)
    out << trace_to_json(trace).dump(2) << "\n";
  else
    write_csv(trace, out);
  if (!out) throw std::runtime_error("export_trace: write failed for " + path);
}

TraceFile read_trace(TraceFormat format, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace: cannot open " + path);
  if (format == TraceFormat::json) {
    nlohmann::json j;
    in >> j;
    return trace_from_json(j);
  }
  return read_csv(in, path);
}

}  // namespace qnk
