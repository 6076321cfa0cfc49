#include "ufin/data/tsv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ufin/error.hpp"

namespace ufin {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

const char* kFixedColumns[] = {"domain_id", "row_id", "label"};

}  // namespace

TsvLoadResult load_tsv(const fs::path& path, const Schema& schema, TsvOptions options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_tabs(line);

  std::map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!column_of.emplace(header[c], c).second) {
      throw DataError(path.string() + ": duplicate column '" + header[c] + "'");
    }
  }
  std::vector<std::string> expected(std::begin(kFixedColumns), std::end(kFixedColumns));
  for (const FieldSchema& f : schema.fields()) expected.push_back(f.name);
  for (const std::string& name : expected) {
    if (!column_of.count(name)) throw DataError(path.string() + ": missing column '" + name + "'");
  }
  if (header.size() != expected.size()) {
    for (const std::string& h : header) {
      if (std::find(expected.begin(), expected.end(), h) == expected.end()) {
        throw DataError(path.string() + ": unexpected column '" + h + "'");
      }
    }
  }

  TsvLoadResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    std::string problem;
    InstanceRecord rec;
    bool drop = false;
    if (cells.size() != header.size()) {
      problem = "expected " + std::to_string(header.size()) + " columns, got " +
                std::to_string(cells.size());
    } else if (!parse_number(cells[column_of["domain_id"]], rec.domain_id) || rec.domain_id < 0) {
      problem = "bad domain_id '" + cells[column_of["domain_id"]] + "'";
    } else if (!parse_number(cells[column_of["row_id"]], rec.row_id)) {
      problem = "bad row_id '" + cells[column_of["row_id"]] + "'";
    } else {
      const std::string& label = cells[column_of["label"]];
      int value = 0;
      if (!parse_number(label, value)) {
        problem = "bad label '" + label + "'";
      } else if (options.ratings) {
        if (value < 1 || value > 5) {
          problem = "rating '" + label + "' outside 1..5";
        } else if (auto mapped = map_rating_to_label(value)) {
          rec.label = *mapped;
        } else {
          drop = true;
        }
      } else if (value != 0 && value != 1) {
        problem = "bad label '" + label + "' (expected 0 or 1)";
      } else {
        rec.label = value;
      }
    }
    if (!problem.empty()) {
      const std::string msg = path.string() + ":" + std::to_string(line_no) + ": " + problem;
      if (!options.lenient) throw DataError(msg);
      result.skipped.push_back({line_no, msg});
      continue;
    }
    if (drop) continue;
    rec.values.reserve(schema.size());
    for (const FieldSchema& f : schema.fields()) rec.values.push_back(cells[column_of[f.name]]);
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_tsv(const fs::path& path, std::span<const InstanceRecord> records,
               const Schema& schema) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "domain_id\trow_id\tlabel";
  for (const FieldSchema& f : schema.fields()) out << '\t' << f.name;
  out << '\n';
  for (const InstanceRecord& r : records) {
    validate_record(r, schema);
    out << r.domain_id << '\t' << r.row_id << '\t' << r.label;
    for (const std::string& v : r.values) {
      if (v.find_first_of("\t\r\n") != std::string::npos) {
        throw DataError("row " + std::to_string(r.row_id) +
                        ": values may not contain tabs or newlines");
      }
      out << '\t' << v;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Schema read_schema(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema " + path.string());
  try {
    return Schema::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_schema(const fs::path& path, const Schema& schema) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << schema.to_json().dump(2) << '\n';
}

fs::path domain_dir(const fs::path& root, int domain_id) {
  return root / ("domain_" + std::to_string(domain_id));
}

void write_domain(const fs::path& dir, const DomainDataset& dataset) {
  fs::create_directories(dir);
  write_schema(dir / "schema.json", dataset.schema);
  {
    std::ofstream out(dir / "domain.json", std::ios::trunc);
    nlohmann::json meta{{"domain_id", dataset.domain_id},
                        {"name", dataset.name},
                        {"item_noun", dataset.item_noun}};
    out << meta.dump(2) << '\n';
  }
  write_tsv(dir / "train.tsv", dataset.splits.train, dataset.schema);
  write_tsv(dir / "valid.tsv", dataset.splits.valid, dataset.schema);
  write_tsv(dir / "test.tsv", dataset.splits.test, dataset.schema);
}

DomainDataset read_domain(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("missing domain directory " + dir.string());
  DomainDataset d;
  d.schema = read_schema(dir / "schema.json");
  std::ifstream meta_in(dir / "domain.json");
  if (!meta_in) throw DataError("missing " + (dir / "domain.json").string());
  try {
    const auto meta = nlohmann::json::parse(meta_in);
    d.domain_id = meta.at("domain_id").get<int>();
    d.name = meta.value("name", "domain_" + std::to_string(d.domain_id));
    d.item_noun = meta.value("item_noun", "item");
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "domain.json").string() + ": " + e.what());
  }
  d.splits.train = load_tsv(dir / "train.tsv", d.schema).records;
  d.splits.valid = load_tsv(dir / "valid.tsv", d.schema).records;
  d.splits.test = load_tsv(dir / "test.tsv", d.schema).records;
  for (const auto* part : {&d.splits.train, &d.splits.valid, &d.splits.test}) {
    for (const InstanceRecord& r : *part) {
      if (r.domain_id != d.domain_id) {
        throw DataError(dir.string() + ": row " + std::to_string(r.row_id) + " has domain_id " +
                        std::to_string(r.domain_id) + ", expected " +
                        std::to_string(d.domain_id));
      }
    }
  }
  return d;
}

std::vector<DomainDataset> read_domains(const fs::path& root, const std::vector<int>& only) {
  if (!fs::is_directory(root)) throw DataError("missing data directory " + root.string());
  std::vector<int> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    int id = 0;
    if (entry.is_directory() && name.rfind("domain_", 0) == 0 && parse_number(name.substr(7), id)) {
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  for (int want : only) {
    if (std::find(ids.begin(), ids.end(), want) == ids.end()) {
      throw DataError("domain " + std::to_string(want) + " not found under " + root.string());
    }
  }
  std::vector<DomainDataset> result;
  for (int id : ids) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    result.push_back(read_domain(domain_dir(root, id)));
  }
  if (result.empty()) throw DataError("no domain_<id> directories under " + root.string());
  return result;
}

}  // namespace ufin
