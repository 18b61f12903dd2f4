#include "slda/metrics_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "slda/common.hpp"

namespace slda {

const char* const kMetricsCsvHeader =
    "minibatch_t,docs_seen,wall_time_s,log_pred_prob,npmi,mean_sparsity,mean_infer_ms";

void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw RuntimeFailure("cannot write " + path);
  std::fprintf(f, "%s\n", kMetricsCsvHeader);
  for (const auto& r : rows) {
    std::fprintf(f, "%" PRIu64 ",%" PRId64 ",%.6f,%.*g,%.*g,%.*g,%.6f\n", r.minibatch_t,
                 r.docs_seen, r.wall_time_s, 17, r.log_pred_prob, 17, r.npmi, 17,
                 r.mean_sparsity, r.mean_infer_ms);
  }
  if (std::fclose(f) != 0) throw RuntimeFailure("write failed: " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty metrics file");
  if (line != kMetricsCsvHeader) throw ParseError(path + ": unexpected CSV header");
  std::vector<MetricsRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    MetricsRow r;
    if (std::sscanf(line.c_str(), "%" SCNu64 ",%" SCNd64 ",%lf,%lf,%lf,%lf,%lf",
                    &r.minibatch_t, &r.docs_seen, &r.wall_time_s, &r.log_pred_prob, &r.npmi,
                    &r.mean_sparsity, &r.mean_infer_ms) != 7)
      throw ParseError(path + ": malformed metrics row", line_no);
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json metrics_row_to_json(const MetricsRow& row) {
  return nlohmann::json{{"minibatch_t", row.minibatch_t},
                        {"docs_seen", row.docs_seen},
                        {"wall_time_s", row.wall_time_s},
                        {"log_pred_prob", row.log_pred_prob},
                        {"npmi", row.npmi},
                        {"mean_sparsity", row.mean_sparsity},
                        {"mean_infer_ms", row.mean_infer_ms}};
}

void write_metrics_json(const std::string& path, const nlohmann::json& config,
                        std::span<const MetricsRow> rows, const nlohmann::json& metadata) {
  nlohmann::json doc;
  doc["schema"] = "slda-metrics-v1";
  doc["config"] = config;
  doc["metadata"] = metadata;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) doc["rows"].push_back(metrics_row_to_json(r));
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

}  // namespace slda
