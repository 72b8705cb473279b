#include "vtreid/datamodel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vtreid/core/error.hpp"

namespace vtreid::data {

std::string_view to_string(DomainTag tag) { return tag == DomainTag::source ? "source" : "target"; }

DomainDataset::DomainDataset(DomainTag tag, std::vector<Record> records, std::vector<Image> images,
                             std::filesystem::path root)
    : tag_(tag), records_(std::move(records)), images_(std::move(images)), root_(std::move(root)) {
  if (records_.size() != images_.size()) throw ContractError("record/image count mismatch");
  if (tag_ == DomainTag::target) {
    for (auto& r : records_) r.identity.reset();
    return;
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!records_[i].identity) {
      throw SchemaError("source record " + std::to_string(i) + " (" + records_[i].path +
                        ") has no identity");
    }
    ids.insert(*records_[i].identity);
  }
  identities_.assign(ids.begin(), ids.end());
}

int DomainDataset::identity(std::size_t i) const {
  if (tag_ == DomainTag::target) throw LabelAccessError("identity labels are not available on a target dataset");
  return *records_.at(i).identity;
}

std::vector<int> DomainDataset::identity_set() const {
  if (tag_ == DomainTag::target) throw LabelAccessError("identity labels are not available on a target dataset");
  return identities_;
}

int DomainDataset::class_index(int identity) const {
  if (tag_ == DomainTag::target) throw LabelAccessError("identity labels are not available on a target dataset");
  auto it = std::lower_bound(identities_.begin(), identities_.end(), identity);
  if (it == identities_.end() || *it != identity) {
    throw ContractError("identity " + std::to_string(identity) + " not in dataset");
  }
  return static_cast<int>(it - identities_.begin());
}

DomainDataset DomainDataset::retagged(DomainTag tag) const {
  return DomainDataset(tag, records_, images_, root_);
}

namespace {

std::optional<int> parse_optional_int(std::string_view field, std::size_t line, const char* what) {
  if (field == "-") return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(field) + "'", line);
  }
  if (value < 0) throw ParseError(std::string(what) + " must be nonnegative", line);
  return value;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

}  // namespace

DomainDataset load_manifest(const std::filesystem::path& path, DomainTag tag) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const std::filesystem::path root = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || trim(line) != kManifestHeader) {
    throw ParseError("missing manifest header " + std::string(kManifestHeader), 1);
  }
  ++line_no;
  std::vector<Record> records;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 3 || fields[0].empty()) {
      throw ParseError("expected 'relative_path,identity_id,camera_id'", line_no);
    }
    Record r;
    r.path = fields[0];
    r.identity = parse_optional_int(fields[1], line_no, "identity_id");
    r.camera = parse_optional_int(fields[2], line_no, "camera_id");
    if (tag == DomainTag::source && !r.identity) {
      throw SchemaError("source manifest " + path.string() + " lacks identity_id at line " +
                        std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  std::vector<Image> images;
  images.reserve(records.size());
  for (const auto& r : records) {
    const auto full = root / r.path;
    if (!std::filesystem::exists(full)) throw IoError("manifest references missing image " + full.string());
    images.push_back(read_png(full));
  }
  return DomainDataset(tag, std::move(records), std::move(images), root);
}

std::string format_manifest(const std::vector<Record>& records) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.path;
    out += ',';
    out += r.identity ? std::to_string(*r.identity) : "-";
    out += ',';
    out += r.camera ? std::to_string(*r.camera) : "-";
    out += '\n';
  }
  return out;
}

void save_dataset(const DomainDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto full = dir / dataset.path(i);
    std::filesystem::create_directories(full.parent_path());
    write_png(full, dataset.image(i));
  }
  std::ofstream out(dir / "manifest.csv", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << format_manifest(dataset.records());
}

}  // namespace vtreid::data
