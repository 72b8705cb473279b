#include "vtreid/io/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vtreid/core/error.hpp"

namespace vtreid::io {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'V', 'T', 'R', 'B'};
constexpr const char* kMetadataFile = "metadata.json";

static_assert(std::endian::native == std::endian::little, "blob IO assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in, const fs::path& file) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("truncated blob " + file.string());
  return v;
}

std::string get_string(std::istream& in, const fs::path& file) {
  const std::uint32_t n = get_u32(in, file);
  if (n > (1u << 20)) throw SchemaError("implausible string length in blob " + file.string());
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw IoError("truncated blob " + file.string());
  return s;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + file.string());
}

}  // namespace

NamedTensors named_values(const nn::ParamStore& params) {
  NamedTensors out;
  for (const auto& [name, v] : params.entries()) out.emplace_back(name, v.value());
  return out;
}

void write_blob(const fs::path& file, const std::string& role, const NamedTensors& tensors) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(kMagic, 4);
  put_u32(out, kBlobVersion);
  put_string(out, role);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_string(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to " + file.string());
}

NamedTensors read_blob(const fs::path& file, const std::string& expected_role) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw SchemaError(file.string() + " is not a tensor blob");
  }
  const std::uint32_t version = get_u32(in, file);
  if (version != kBlobVersion) {
    throw SchemaError(file.string() + ": unsupported blob version " + std::to_string(version));
  }
  const std::string role = get_string(in, file);
  if (role != expected_role) {
    throw SchemaError(file.string() + ": role '" + role + "', expected '" + expected_role + "'");
  }
  const std::uint32_t count = get_u32(in, file);
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in, file);
    const std::uint32_t rank = get_u32(in, file);
    if (rank > 8) throw SchemaError(file.string() + ": bad rank for " + name);
    tensor::Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(get_u32(in, file));
    tensor::Tensor t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw IoError("truncated blob " + file.string());
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

BundleWriter::BundleWriter(fs::path dir) : dir_(std::move(dir)) {
  tmp_ = dir_;
  tmp_ += ".tmp";
  fs::remove_all(tmp_);
  fs::create_directories(tmp_);
}

BundleWriter::~BundleWriter() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
  }
}

void BundleWriter::add_tensors(const std::string& role, const NamedTensors& tensors) {
  const std::string file = role + ".blob";
  write_blob(tmp_ / file, role, tensors);
  blobs_[role] = file;
}

void BundleWriter::add_text(const std::string& name, const std::string& content) {
  write_all(tmp_ / name, content);
  texts_[name] = name;
}

void BundleWriter::commit(Json metadata) {
  metadata["format"] = "vtreid-bundle";
  metadata["version"] = kBundleVersion;
  metadata["blobs"] = blobs_;
  metadata["texts"] = texts_;
  write_all(tmp_ / kMetadataFile, metadata.dump(2) + "\n");
  // Swap via a second rename so an old bundle is replaced in one step where
  // the filesystem allows it.
  fs::path old = dir_;
  old += ".old";
  fs::remove_all(old);
  if (fs::exists(dir_)) fs::rename(dir_, old);
  fs::rename(tmp_, dir_);
  fs::remove_all(old);
  committed_ = true;
}

BundleReader::BundleReader(fs::path dir) : dir_(std::move(dir)) {
  const fs::path meta = dir_ / kMetadataFile;
  if (!fs::exists(meta)) throw IoError("no bundle metadata at " + meta.string());
  try {
    metadata_ = Json::parse(slurp(meta));
  } catch (const Json::parse_error& e) {
    throw SchemaError(meta.string() + ": " + e.what());
  }
  if (metadata_.value("format", "") != "vtreid-bundle") throw SchemaError(meta.string() + " is not a bundle");
  if (metadata_.value("version", 0) != kBundleVersion) {
    throw SchemaError(meta.string() + ": unsupported bundle version");
  }
}

bool BundleReader::has_tensors(const std::string& role) const {
  return metadata_.contains("blobs") && metadata_["blobs"].contains(role);
}

NamedTensors BundleReader::tensors(const std::string& role) const {
  if (!has_tensors(role)) throw SchemaError(dir_.string() + ": bundle has no '" + role + "' blob");
  return read_blob(dir_ / metadata_["blobs"][role].get<std::string>(), role);
}

std::string BundleReader::text(const std::string& name) const {
  if (!metadata_.contains("texts") || !metadata_["texts"].contains(name)) {
    throw SchemaError(dir_.string() + ": bundle has no '" + name + "' entry");
  }
  return slurp(dir_ / metadata_["texts"][name].get<std::string>());
}

}  // namespace vtreid::io
