#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace slda {

// One evaluation cadence row; the CSV column order is fixed.
struct MetricsRow {
  uint64_t minibatch_t = 0;
  int64_t docs_seen = 0;
  double wall_time_s = 0.0;
  double log_pred_prob = 0.0;
  double npmi = 0.0;
  double mean_sparsity = 0.0;
  double mean_infer_ms = 0.0;
};

extern const char* const kMetricsCsvHeader;

void write_metrics_csv(const std::string& path, std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

nlohmann::json metrics_row_to_json(const MetricsRow& row);
void write_metrics_json(const std::string& path, const nlohmann::json& config,
                        std::span<const MetricsRow> rows, const nlohmann::json& metadata);

}  // namespace slda
