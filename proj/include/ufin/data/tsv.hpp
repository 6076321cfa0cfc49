#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ufin/data/dataset.hpp"

namespace ufin {

// TSV layout: header "domain_id, row_id, label, <schema fields...>" followed by
// one record per line. A domain directory holds schema.json, domain.json and
// train.tsv / valid.tsv / test.tsv.

struct TsvIssue {
  std::size_t line = 0;
  std::string message;
};

struct TsvLoadResult {
  std::vector<InstanceRecord> records;
  std::vector<TsvIssue> skipped;  // only populated in lenient mode
};

struct TsvOptions {
  bool lenient = false;
  // Treat the label column as a 1..5 rating and map it to a click label;
  // rating 3 rows are dropped.
  bool ratings = false;
};

TsvLoadResult load_tsv(const std::filesystem::path& path, const Schema& schema,
                       TsvOptions options = {});
void write_tsv(const std::filesystem::path& path, std::span<const InstanceRecord> records,
               const Schema& schema);

Schema read_schema(const std::filesystem::path& path);
void write_schema(const std::filesystem::path& path, const Schema& schema);

void write_domain(const std::filesystem::path& dir, const DomainDataset& dataset);
DomainDataset read_domain(const std::filesystem::path& dir);
// Reads every domain_<id> directory under root, ordered by id. A non-empty
// `only` restricts the result to those domain ids.
std::vector<DomainDataset> read_domains(const std::filesystem::path& root,
                                        const std::vector<int>& only = {});
std::filesystem::path domain_dir(const std::filesystem::path& root, int domain_id);

}  // namespace ufin
