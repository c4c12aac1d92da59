#include <fstream>
#include <nlohmann/json.hpp>

#include "scr/data_io.hpp"
#include "scr/errors.hpp"

namespace scr {

MetricRecord to_record(const EpochMetrics& m) {
  return {m.epoch,
          {{"confident_set_size", static_cast<double>(m.confident_set_size)},
           {"consistency_loss", m.consistency_loss},
           {"eta", m.eta},
           {"supervised_loss", m.supervised_loss},
           {"test_acc", m.test_acc},
           {"train_acc", m.train_acc},
           {"valid_acc", m.valid_acc},
           {"warmup_active", m.warmup_active ? 1.0 : 0.0}}};
}

void write_metrics(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(path.string() + ": cannot open for writing");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].epoch <= records[i - 1].epoch) {
      throw ContractError("write_metrics: epochs must be strictly increasing");
    }
    nlohmann::json line = nlohmann::json::object();
    line["epoch"] = records[i].epoch;
    for (const auto& [key, value] : records[i].values) {
      if (key == "epoch") throw ContractError("write_metrics: 'epoch' is reserved");
      line[key] = value;
    }
    out << line.dump() << '\n';
  }
  if (!out) throw LoadError(path.string() + ": write failed");
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open");
  std::vector<MetricRecord> records;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json line;
    try {
      line = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(where + "malformed record (" + e.what() + ")");
    }
    if (!line.is_object() || !line.contains("epoch") || !line["epoch"].is_number_unsigned()) {
      throw LoadError(where + "record needs an unsigned integer 'epoch'");
    }
    MetricRecord record;
    record.epoch = line["epoch"].get<std::size_t>();
    if (!records.empty() && record.epoch <= records.back().epoch) {
      throw LoadError(where + "epoch not strictly increasing");
    }
    for (const auto& [key, value] : line.items()) {
      if (key == "epoch") continue;
      if (!value.is_number()) throw LoadError(where + "value of '" + key + "' is not a number");
      record.values[key] = value.get<double>();
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace scr
