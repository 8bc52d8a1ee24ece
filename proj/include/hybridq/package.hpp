// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// On-disk interchange format.
//
// A package is a directory holding
//   manifest.json  UTF-8 JSON, keys sorted
//   tensors.bin    little-endian f32 or raw u8 payloads, concatenated,
//                  addressed by byte offset, no padding
//
// Model manifests carry {"format_version": 1, "metadata": {...}, "root": node}
// where a node is
//   {"name", "kind", "children": [...], "tensors": {slot: record},
//    "attrs": {key: int}, "quant_act": params (Softmax only, optional)}
// and a record is
//   {"dtype": "f32"|"u8", "shape": [...], "offset", "nbytes", "quant": params}.
// Params are {"scheme": "uniform"|"log2", "bits", "delta", "zero_point",
// "min", "max", "epsilon" (log2 only)}.
//
// Trace manifests carry {"format_version": 1, "n_samples": N,
// "sites": {site_id: [record, ...]}}.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridq/tensor.hpp"

namespace hybridq {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kBlobFile = "tensors.bin";
inline constexpr std::string_view kSiteSuffix = ":post_softmax";

class LayerKind {
 public:
  enum Tag { kConv2d, kLinear, kReLU, kSoftmax, kAttention, kFlatten, kContainer, kOther };

  LayerKind(Tag tag = kContainer) : tag_(tag) {}  // NOLINT(google-explicit-constructor)
  static LayerKind other(std::string name);
  /// Known names map to their tag; anything else becomes Other(name).
  static LayerKind parse(std::string_view name);

  Tag tag() const noexcept { return tag_; }
  std::string str() const;

  friend bool operator==(const LayerKind&, const LayerKind&) = default;

 private:
  Tag tag_;
  std::string other_name_;
};

enum class DType { kF32, kU8 };

std::size_t dtype_size(DType dtype) noexcept;

struct TensorRecord {
  DType dtype = DType::kF32;
  Shape shape;
  std::uint64_t offset = 0;
  std::uint64_t nbytes = 0;
  std::optional<QuantParams> quant;  // present iff dtype == u8

  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

struct ModuleNode {
  std::string name;
  LayerKind kind;
  std::vector<ModuleNode> children;
  std::map<std::string, TensorRecord> tensors;
  std::map<std::string, std::int64_t> attrs;
  std::optional<LogParams> quant_act;

  const TensorRecord* tensor(std::string_view slot) const;
  std::int64_t attr(std::string_view key, std::int64_t fallback) const;

  friend bool operator==(const ModuleNode&, const ModuleNode&) = default;
};

/// Appends payloads and hands back the records that address them.
class BlobWriter {
 public:
  TensorRecord append(const Tensor& t);
  TensorRecord append(const QuantTensor& q);
  /// Copies the payload of `record` out of `source`, re-addressed here.
  TensorRecord copy_from(std::span<const std::uint8_t> source, const TensorRecord& record);

  std::vector<std::uint8_t> release() && { return std::move(bytes_); }
  std::size_t size() const noexcept { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

Tensor read_f32(std::span<const std::uint8_t> blob, const TensorRecord& record);
QuantTensor read_quant(std::span<const std::uint8_t> blob, const TensorRecord& record);

struct ModelPackage {
  int format_version = kFormatVersion;
  ModuleNode root;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::uint8_t> blob;

  Tensor read_f32(const TensorRecord& record) const { return hybridq::read_f32(blob, record); }
  QuantTensor read_quant(const TensorRecord& record) const {
    return hybridq::read_quant(blob, record);
  }
};

struct TracePackage {
  int n_samples = 0;
  std::map<std::string, std::vector<TensorRecord>> sites;
  std::vector<std::uint8_t> blob;

  Tensor sample(const std::string& site, int index) const;
};

/// Accumulates trace samples site by site.
class TraceBuilder {
 public:
  void add(const std::string& site, const Tensor& sample);
  /// Throws kSampleCountMismatch unless every site holds `n_samples` samples.
  TracePackage finish(int n_samples) &&;

 private:
  BlobWriter blob_;
  std::map<std::string, std::vector<TensorRecord>> sites_;
};

// Paths ---------------------------------------------------------------------

std::string join_path(std::string_view parent, std::string_view child);
std::string site_id(std::string_view node_path);
/// Strips the ":post_softmax" suffix; nullopt if absent.
std::optional<std::string> site_node_path(std::string_view site);

/// Pre-order walk; the root's path is its own name.
void for_each_node(const ModuleNode& root,
                   const std::function<void(const ModuleNode&, const std::string&)>& fn);
std::size_t node_count(const ModuleNode& root);
const ModuleNode* find_node(const ModuleNode& root, std::string_view path);
ModuleNode* find_node(ModuleNode& root, std::string_view path);

// Serialization ---------------------------------------------------------------

nlohmann::json params_to_json(const QuantParams& params);
QuantParams params_from_json(const nlohmann::json& j);

nlohmann::json manifest_json(const ModelPackage& pkg);
ModelPackage package_from_json(const nlohmann::json& manifest, std::vector<std::uint8_t> blob);
nlohmann::json trace_manifest_json(const TracePackage& traces);
TracePackage traces_from_json(const nlohmann::json& manifest, std::vector<std::uint8_t> blob);

/// Checks every structural invariant; throws Error with a specific code.
void validate(const ModelPackage& pkg);
void validate(const TracePackage& traces);

ModelPackage load_package(const std::filesystem::path& dir);
void save_package(const ModelPackage& pkg, const std::filesystem::path& dir);
TracePackage load_traces(const std::filesystem::path& dir);
void save_traces(const TracePackage& traces, const std::filesystem::path& dir);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace hybridq
