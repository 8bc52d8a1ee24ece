// Copyright 2026 The hybridq Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridq/package.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <utility>

#include "hybridq/error.hpp"

namespace hybridq {

static_assert(std::endian::native == std::endian::little,
              "tensors.bin is little-endian; big-endian hosts need byte swapping");

using nlohmann::json;

namespace {

constexpr std::pair<LayerKind::Tag, std::string_view> kKindNames[] = {
    {LayerKind::kConv2d, "Conv2d"},   {LayerKind::kLinear, "Linear"},
    {LayerKind::kReLU, "ReLU"},       {LayerKind::kSoftmax, "Softmax"},
    {LayerKind::kAttention, "Attention"}, {LayerKind::kFlatten, "Flatten"},
    {LayerKind::kContainer, "Container"},
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

std::string dtype_name(DType d) { return d == DType::kF32 ? "f32" : "u8"; }

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::kF32;
  if (s == "u8") return DType::kU8;
  fail(ErrorCode::kMalformedJson, "unknown dtype '" + s + "'");
}

json record_to_json(const TensorRecord& r) {
  json j;
  j["dtype"] = dtype_name(r.dtype);
  j["shape"] = r.shape.dims();
  j["offset"] = r.offset;
  j["nbytes"] = r.nbytes;
  if (r.quant) j["quant"] = params_to_json(*r.quant);
  return j;
}

TensorRecord record_from_json(const json& j) {
  TensorRecord r;
  r.dtype = parse_dtype(j.at("dtype").get<std::string>());
  r.shape = Shape(j.at("shape").get<std::vector<std::int64_t>>());
  const auto offset = j.at("offset").get<std::int64_t>();
  const auto nbytes = j.at("nbytes").get<std::int64_t>();
  if (offset < 0 || nbytes < 0) fail(ErrorCode::kRecordOutOfRange, "record out of range");
  r.offset = static_cast<std::uint64_t>(offset);
  r.nbytes = static_cast<std::uint64_t>(nbytes);
  if (j.contains("quant")) r.quant = params_from_json(j.at("quant"));
  return r;
}

json node_to_json(const ModuleNode& n) {
  json j;
  j["name"] = n.name;
  j["kind"] = n.kind.str();
  j["children"] = json::array();
  for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
  j["tensors"] = json::object();
  for (const auto& [slot, rec] : n.tensors) j["tensors"][slot] = record_to_json(rec);
  j["attrs"] = json::object();
  for (const auto& [k, v] : n.attrs) j["attrs"][k] = v;
  if (n.quant_act) j["quant_act"] = params_to_json(*n.quant_act);
  return j;
}

ModuleNode node_from_json(const json& j) {
  ModuleNode n;
  n.name = j.at("name").get<std::string>();
  n.kind = LayerKind::parse(j.at("kind").get<std::string>());
  if (j.contains("children")) {
    for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
  }
  if (j.contains("tensors")) {
    for (const auto& [slot, rec] : j.at("tensors").items()) n.tensors[slot] = record_from_json(rec);
  }
  if (j.contains("attrs")) {
    for (const auto& [k, v] : j.at("attrs").items()) n.attrs[k] = v.get<std::int64_t>();
  }
  if (j.contains("quant_act")) {
    auto p = params_from_json(j.at("quant_act"));
    if (!std::holds_alternative<LogParams>(p)) {
      fail(ErrorCode::kDtypeQuantMismatch, "quant_act on '" + n.name + "' must use the log2 scheme");
    }
    n.quant_act = std::get<LogParams>(p);
  }
  return n;
}

void validate_params(const QuantParams& params, const std::string& where) {
  std::visit(
      [&](const auto& p) {
        if (p.bits < 2 || p.bits > 8) fail(ErrorCode::kInvalidArgument, where + ": bits must be in [2, 8]");
        if (!(p.delta > 0.0) || !std::isfinite(p.delta)) {
          fail(ErrorCode::kInvalidArgument, where + ": delta must be positive");
        }
        if (!(p.min <= p.max)) fail(ErrorCode::kInvalidArgument, where + ": min > max");
      },
      params);
  if (const auto* a = std::get_if<AffineParams>(&params)) {
    if (a->zero_point < 0 || a->zero_point > static_cast<std::int32_t>(a->max_code())) {
      fail(ErrorCode::kInvalidArgument, where + ": zero_point outside code range");
    }
  }
}

// Record bounds and pairwise overlap over a set of records sharing one blob.
class RecordChecker {
 public:
  explicit RecordChecker(std::size_t blob_size) : blob_size_(blob_size) {}

  void check(const TensorRecord& r, const std::string& where) {
    const auto expected = r.shape.element_count() * dtype_size(r.dtype);
    if (r.nbytes != expected) {
      fail(ErrorCode::kRecordOutOfRange, "record out of range: " + where + " declares " +
                                             std::to_string(r.nbytes) + " bytes, shape needs " +
                                             std::to_string(expected));
    }
    if (r.offset > blob_size_ || r.nbytes > blob_size_ - r.offset) {
      fail(ErrorCode::kRecordOutOfRange, "record out of range: " + where);
    }
    spans_.emplace_back(r.offset, r.offset + r.nbytes, where);
  }

  void check_overlap() {
    std::sort(spans_.begin(), spans_.end());
    for (std::size_t i = 1; i < spans_.size(); ++i) {
      if (std::get<0>(spans_[i]) < std::get<1>(spans_[i - 1])) {
        fail(ErrorCode::kOverlappingRecords, "records overlap: " + std::get<2>(spans_[i - 1]) +
                                                 " and " + std::get<2>(spans_[i]));
      }
    }
  }

 private:
  std::size_t blob_size_;
  std::vector<std::tuple<std::uint64_t, std::uint64_t, std::string>> spans_;
};

void validate_node(const ModelPackage& pkg, const ModuleNode& n, const std::string& path,
                   RecordChecker& records) {
  if (n.name.empty() || n.name.find('.') != std::string::npos) {
    fail(ErrorCode::kInvalidName, "invalid node name '" + n.name + "' at " + path);
  }
  const auto tag = n.kind.tag();
  if ((tag == LayerKind::kConv2d || tag == LayerKind::kLinear) && !n.tensor("weight")) {
    fail(ErrorCode::kMissingWeight, path + ": " + n.kind.str() + " has no weight tensor");
  }
  if (tag == LayerKind::kContainer && !n.tensors.empty()) {
    fail(ErrorCode::kInvalidArgument, path + ": Container nodes carry no tensors");
  }
  if (n.quant_act) {
    if (tag != LayerKind::kSoftmax) {
      fail(ErrorCode::kDtypeQuantMismatch, path + ": quant_act is only valid on Softmax nodes");
    }
    validate_params(*n.quant_act, path + ".quant_act");
  }
  for (const auto& [slot, rec] : n.tensors) {
    const std::string where = path + ":" + slot;
    if ((rec.dtype == DType::kU8) != rec.quant.has_value()) {
      fail(ErrorCode::kDtypeQuantMismatch,
           "dtype/quant mismatch at " + where + ": u8 records need a quant block, f32 records none");
    }
    if (slot == "bias" && rec.dtype != DType::kF32) {
      fail(ErrorCode::kDtypeQuantMismatch, where + ": bias tensors stay f32");
    }
    records.check(rec, where);
    if (rec.quant) {
      validate_params(*rec.quant, where);
      read_quant(pkg.blob, rec);  // code range
    } else {
      read_f32(pkg.blob, rec);  // finiteness
    }
  }
  std::set<std::string> seen;
  for (const auto& c : n.children) {
    if (!seen.insert(c.name).second) {
      fail(ErrorCode::kDuplicateName, path + ": duplicate child name '" + c.name + "'");
    }
    validate_node(pkg, c, join_path(path, c.name), records);
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "missing file: " + p.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

json read_manifest(const std::filesystem::path& dir) {
  const auto bytes = read_file(dir / kManifestFile);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedJson, "malformed JSON in " + (dir / kManifestFile).string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& p, const void* data, std::size_t size) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(ErrorCode::kIo, "write failed: " + p.string());
}

void write_dir(const std::filesystem::path& dir, const std::string& manifest,
               std::span<const std::uint8_t> blob) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / kManifestFile, manifest.data(), manifest.size());
  write_file(dir / kBlobFile, blob.data(), blob.size());
}

void check_version(const json& manifest) {
  const auto v = manifest.at("format_version").get<int>();
  if (v != kFormatVersion) {
    fail(ErrorCode::kUnknownFormatVersion, "unknown format_version " + std::to_string(v));
  }
}

// Structural JSON errors (missing keys, wrong types) all surface as malformed JSON.
template <typename F>
auto guard_json(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedJson, std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace

// LayerKind -------------------------------------------------------------------

LayerKind LayerKind::other(std::string name) {
  LayerKind k(kOther);
  k.other_name_ = std::move(name);
  return k;
}

LayerKind LayerKind::parse(std::string_view name) {
  for (const auto& [tag, n] : kKindNames) {
    if (n == name) return LayerKind(tag);
  }
  return other(std::string(name));
}

std::string LayerKind::str() const {
  for (const auto& [tag, n] : kKindNames) {
    if (tag == tag_) return std::string(n);
  }
  return other_name_;
}

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::kF32 ? 4 : 1; }

const TensorRecord* ModuleNode::tensor(std::string_view slot) const {
  auto it = tensors.find(std::string(slot));
  return it == tensors.end() ? nullptr : &it->second;
}

std::int64_t ModuleNode::attr(std::string_view key, std::int64_t fallback) const {
  auto it = attrs.find(std::string(key));
  return it == attrs.end() ? fallback : it->second;
}

// Blob ------------------------------------------------------------------------

TensorRecord BlobWriter::append(const Tensor& t) {
  TensorRecord r;
  r.dtype = DType::kF32;
  r.shape = t.shape();
  r.offset = bytes_.size();
  r.nbytes = t.size() * sizeof(float);
  bytes_.resize(bytes_.size() + r.nbytes);
  std::memcpy(bytes_.data() + r.offset, t.data().data(), r.nbytes);
  return r;
}

TensorRecord BlobWriter::append(const QuantTensor& q) {
  TensorRecord r;
  r.dtype = DType::kU8;
  r.shape = q.shape();
  r.offset = bytes_.size();
  r.nbytes = q.size();
  r.quant = q.params();
  bytes_.insert(bytes_.end(), q.codes().begin(), q.codes().end());
  return r;
}

TensorRecord BlobWriter::copy_from(std::span<const std::uint8_t> source, const TensorRecord& record) {
  if (record.offset > source.size() || record.nbytes > source.size() - record.offset) {
    fail(ErrorCode::kRecordOutOfRange, "record out of range");
  }
  TensorRecord r = record;
  r.offset = bytes_.size();
  const auto first = source.begin() + static_cast<std::ptrdiff_t>(record.offset);
  bytes_.insert(bytes_.end(), first, first + static_cast<std::ptrdiff_t>(record.nbytes));
  return r;
}

Tensor read_f32(std::span<const std::uint8_t> blob, const TensorRecord& record) {
  if (record.dtype != DType::kF32) fail(ErrorCode::kDtypeQuantMismatch, "expected an f32 record");
  const auto n = record.shape.element_count();
  if (record.nbytes != n * sizeof(float) || record.offset > blob.size() ||
      record.nbytes > blob.size() - record.offset) {
    fail(ErrorCode::kRecordOutOfRange, "record out of range");
  }
  std::vector<float> data(n);
  std::memcpy(data.data(), blob.data() + record.offset, record.nbytes);
  return Tensor(record.shape, std::move(data));
}

QuantTensor read_quant(std::span<const std::uint8_t> blob, const TensorRecord& record) {
  if (record.dtype != DType::kU8 || !record.quant) {
    fail(ErrorCode::kDtypeQuantMismatch, "expected a u8 record with quant parameters");
  }
  const auto n = record.shape.element_count();
  if (record.nbytes != n || record.offset > blob.size() || record.nbytes > blob.size() - record.offset) {
    fail(ErrorCode::kRecordOutOfRange, "record out of range");
  }
  const auto first = blob.begin() + static_cast<std::ptrdiff_t>(record.offset);
  return QuantTensor(record.shape, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(n)),
                     *record.quant);
}

// Traces ----------------------------------------------------------------------

Tensor TracePackage::sample(const std::string& site, int index) const {
  auto it = sites.find(site);
  if (it == sites.end()) fail(ErrorCode::kPathNotFound, "no trace site '" + site + "'");
  return read_f32(blob, it->second.at(static_cast<std::size_t>(index)));
}

void TraceBuilder::add(const std::string& site, const Tensor& sample) {
  sites_[site].push_back(blob_.append(sample));
}

TracePackage TraceBuilder::finish(int n_samples) && {
  TracePackage t;
  t.sites = std::move(sites_);
  t.n_samples = n_samples;
  t.blob = std::move(blob_).release();
  validate(t);
  return t;
}

// Paths -----------------------------------------------------------------------

std::string join_path(std::string_view parent, std::string_view child) {
  std::string out(parent);
  if (!out.empty()) out += '.';
  out += child;
  return out;
}

std::string site_id(std::string_view node_path) {
  return std::string(node_path) + std::string(kSiteSuffix);
}

std::optional<std::string> site_node_path(std::string_view site) {
  if (site.size() <= kSiteSuffix.size() || !site.ends_with(kSiteSuffix)) return std::nullopt;
  return std::string(site.substr(0, site.size() - kSiteSuffix.size()));
}

namespace {
void walk(const ModuleNode& n, const std::string& path,
          const std::function<void(const ModuleNode&, const std::string&)>& fn) {
  fn(n, path);
  for (const auto& c : n.children) walk(c, join_path(path, c.name), fn);
}
}  // namespace

void for_each_node(const ModuleNode& root,
                   const std::function<void(const ModuleNode&, const std::string&)>& fn) {
  walk(root, root.name, fn);
}

std::size_t node_count(const ModuleNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += node_count(c);
  return n;
}

ModuleNode* find_node(ModuleNode& root, std::string_view path) {
  std::size_t pos = path.find('.');
  if (path.substr(0, pos) != root.name) return nullptr;
  ModuleNode* cur = &root;
  while (pos != std::string_view::npos) {
    const std::size_t next = path.find('.', pos + 1);
    const auto name = path.substr(pos + 1, next == std::string_view::npos ? next : next - pos - 1);
    auto it = std::find_if(cur->children.begin(), cur->children.end(),
                           [&](const ModuleNode& c) { return c.name == name; });
    if (it == cur->children.end()) return nullptr;
    cur = &*it;
    pos = next;
  }
  return cur;
}

const ModuleNode* find_node(const ModuleNode& root, std::string_view path) {
  return find_node(const_cast<ModuleNode&>(root), path);
}

// Serialization -----------------------------------------------------------------

json params_to_json(const QuantParams& params) {
  json j;
  if (const auto* a = std::get_if<AffineParams>(&params)) {
    j["scheme"] = "uniform";
    j["bits"] = a->bits;
    j["delta"] = a->delta;
    j["zero_point"] = a->zero_point;
    j["min"] = a->min;
    j["max"] = a->max;
  } else {
    const auto& l = std::get<LogParams>(params);
    j["scheme"] = "log2";
    j["bits"] = l.bits;
    j["delta"] = l.delta;
    j["zero_point"] = l.zero_point;
    j["min"] = l.min;
    j["max"] = l.max;
    j["epsilon"] = l.epsilon;
  }
  return j;
}

QuantParams params_from_json(const json& j) {
  const auto scheme = j.at("scheme").get<std::string>();
  if (scheme == "uniform") {
    AffineParams a;
    a.bits = j.at("bits").get<int>();
    a.delta = j.at("delta").get<double>();
    a.zero_point = j.at("zero_point").get<std::int32_t>();
    a.min = j.at("min").get<double>();
    a.max = j.at("max").get<double>();
    return a;
  }
  if (scheme == "log2") {
    LogParams l;
    l.bits = j.at("bits").get<int>();
    l.delta = j.at("delta").get<double>();
    l.zero_point = j.at("zero_point").get<std::int32_t>();
    l.min = j.at("min").get<double>();
    l.max = j.at("max").get<double>();
    l.epsilon = j.at("epsilon").get<double>();
    l.log_min = std::log2(l.min + l.epsilon);
    l.log_max = std::log2(l.max + l.epsilon);
    return l;
  }
  fail(ErrorCode::kMalformedJson, "unknown quant scheme '" + scheme + "'");
}

json manifest_json(const ModelPackage& pkg) {
  json j;
  j["format_version"] = pkg.format_version;
  j["metadata"] = pkg.metadata;
  j["root"] = node_to_json(pkg.root);
  return j;
}

ModelPackage package_from_json(const json& manifest, std::vector<std::uint8_t> blob) {
  ModelPackage pkg = guard_json([&] {
    check_version(manifest);
    ModelPackage p;
    p.format_version = kFormatVersion;
    p.root = node_from_json(manifest.at("root"));
    if (manifest.contains("metadata")) p.metadata = manifest.at("metadata");
    return p;
  });
  pkg.blob = std::move(blob);
  validate(pkg);
  return pkg;
}

json trace_manifest_json(const TracePackage& traces) {
  json j;
  j["format_version"] = kFormatVersion;
  j["n_samples"] = traces.n_samples;
  j["sites"] = json::object();
  for (const auto& [site, recs] : traces.sites) {
    auto& arr = j["sites"][site] = json::array();
    for (const auto& r : recs) arr.push_back(record_to_json(r));
  }
  return j;
}

TracePackage traces_from_json(const json& manifest, std::vector<std::uint8_t> blob) {
  TracePackage t = guard_json([&] {
    check_version(manifest);
    TracePackage p;
    p.n_samples = manifest.at("n_samples").get<int>();
    for (const auto& [site, recs] : manifest.at("sites").items()) {
      auto& out = p.sites[site];
      for (const auto& r : recs) out.push_back(record_from_json(r));
    }
    return p;
  });
  t.blob = std::move(blob);
  validate(t);
  return t;
}

void validate(const ModelPackage& pkg) {
  if (pkg.format_version != kFormatVersion) {
    fail(ErrorCode::kUnknownFormatVersion, "unknown format_version " + std::to_string(pkg.format_version));
  }
  RecordChecker records(pkg.blob.size());
  validate_node(pkg, pkg.root, pkg.root.name, records);
  records.check_overlap();
}

void validate(const TracePackage& traces) {
  if (traces.n_samples < 0) fail(ErrorCode::kSampleCountMismatch, "negative n_samples");
  RecordChecker records(traces.blob.size());
  for (const auto& [site, recs] : traces.sites) {
    if (!site_node_path(site)) {
      fail(ErrorCode::kInvalidName, "site id '" + site + "' lacks the :post_softmax suffix");
    }
    if (static_cast<int>(recs.size()) != traces.n_samples) {
      fail(ErrorCode::kSampleCountMismatch,
           "sample count mismatch at " + site + ": " + std::to_string(recs.size()) + " of " +
               std::to_string(traces.n_samples));
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const std::string where = site + "[" + std::to_string(i) + "]";
      if (recs[i].dtype != DType::kF32 || recs[i].quant) {
        fail(ErrorCode::kDtypeQuantMismatch, where + ": trace samples are f32");
      }
      if (recs[i].shape != recs.front().shape) {
        fail(ErrorCode::kShapeMismatch, where + ": sample shape differs within site");
      }
      records.check(recs[i], where);
      read_f32(traces.blob, recs[i]);
    }
  }
  records.check_overlap();
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

ModelPackage load_package(const std::filesystem::path& dir) {
  const json manifest = read_manifest(dir);
  return package_from_json(manifest, read_file(dir / kBlobFile));
}

void save_package(const ModelPackage& pkg, const std::filesystem::path& dir) {
  validate(pkg);
  write_dir(dir, canonical_dump(manifest_json(pkg)), pkg.blob);
}

TracePackage load_traces(const std::filesystem::path& dir) {
  const json manifest = read_manifest(dir);
  return traces_from_json(manifest, read_file(dir / kBlobFile));
}

void save_traces(const TracePackage& traces, const std::filesystem::path& dir) {
  validate(traces);
  write_dir(dir, canonical_dump(trace_manifest_json(traces)), traces.blob);
}

}  // namespace hybridq
