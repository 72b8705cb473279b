#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vtreid/datamodel/image.hpp"

namespace vtreid::data {

// Source datasets are labeled; target datasets never expose identities.
enum class DomainTag { source, target };

std::string_view to_string(DomainTag tag);

struct Record {
  std::string path;  // relative to the dataset root
  std::optional<int> identity;
  std::optional<int> camera;
};

class DomainDataset {
 public:
  DomainDataset() = default;
  // Labels are stripped for target datasets; source datasets must label
  // every record (SchemaError otherwise).
  DomainDataset(DomainTag tag, std::vector<Record> records, std::vector<Image> images,
                std::filesystem::path root = {});

  DomainTag tag() const noexcept { return tag_; }
  bool labeled() const noexcept { return tag_ == DomainTag::source; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::filesystem::path& root() const noexcept { return root_; }

  const std::string& path(std::size_t i) const { return records_.at(i).path; }
  std::optional<int> camera(std::size_t i) const { return records_.at(i).camera; }
  const Image& image(std::size_t i) const { return images_.at(i); }
  const std::vector<Image>& images() const noexcept { return images_; }

  // Throws LabelAccessError on a target dataset.
  int identity(std::size_t i) const;
  // Sorted distinct identities (labeled datasets only).
  std::vector<int> identity_set() const;
  // Dense class index of an identity within identity_set().
  int class_index(int identity) const;

  // Records with the identity column as stored (ABSENT for target).
  const std::vector<Record>& records() const noexcept { return records_; }

  // Same images and paths, relabeled under another tag.
  DomainDataset retagged(DomainTag tag) const;

 private:
  DomainTag tag_ = DomainTag::source;
  std::vector<Record> records_;
  std::vector<Image> images_;
  std::filesystem::path root_;
  std::vector<int> identities_;
};

inline constexpr std::string_view kManifestHeader = "#vtreid-manifest-v1";

// Parses the manifest and decodes every referenced image (paths relative to
// the manifest's directory).
DomainDataset load_manifest(const std::filesystem::path& path, DomainTag tag);

// Writes `dir/manifest.csv` and every image under `dir` at its record path.
// Identities are written only for labeled datasets.
void save_dataset(const DomainDataset& dataset, const std::filesystem::path& dir);

std::string format_manifest(const std::vector<Record>& records);

}  // namespace vtreid::data
