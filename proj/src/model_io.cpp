#include "storygraph/model_io.hpp"

#include <fstream>
#include <sstream>

#include "storygraph/binary_io.hpp"
#include "storygraph/random.hpp"

namespace storygraph {
namespace {

constexpr std::string_view kMagic = "SGNNMODL";

}  // namespace

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string serialize_model(const SavedModel& model) {
  const auto& p = model.params;
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kModelFormatVersion);
  w.u64(p.vocab);
  w.u64(p.dim);
  w.u64(p.classes);
  w.u64(p.edge_count());
  w.u64(p.rounds);
  w.u64(model.window);
  w.u64(model.min_edge_frequency);
  w.u8(model.class_mode == ClassMode::Level ? 0 : 1);
  w.u8(model.text_mode == TextMode::Raw ? 0 : 1);
  w.str(model.project);

  if (model.vocabulary.size() != p.vocab) {
    fail(ErrorCode::DimensionMismatch, "vocabulary size differs from parameter rows");
  }
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    w.str(model.vocabulary.token(id));
    w.u64(model.vocabulary.count(id));
  }
  const auto entries = model.edges.sorted_entries();
  w.u64(entries.size());
  for (const auto& [key, e] : entries) {
    w.u64(key);
    w.u64(e.count);
    w.u32(e.index);
  }
  if (model.class_mode == ClassMode::StoryPointLabels) {
    if (model.class_values.size() != p.classes) {
      fail(ErrorCode::DimensionMismatch, "class value table does not match class count");
    }
    for (int v : model.class_values) w.i32(v);
  }
  w.f64s(p.embeddings);
  w.f64s(p.edge_weights);
  w.f64s(p.gates);
  w.f64s(p.classifier);
  w.f64s(p.bias);
  w.u64(fnv1a(w.bytes()));
  return w.take();
}

void save_model(const std::filesystem::path& path, const SavedModel& model) {
  write_file_bytes(path, serialize_model(model));
}

SavedModel deserialize_model(std::string_view bytes, std::optional<std::size_t> expected_dim) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    fail(ErrorCode::CorruptFile, "not a storygraph model file");
  }
  ByteReader r(bytes);
  r.raw(kMagic.size());
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    fail(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) +
                                         ", expected " + std::to_string(kModelFormatVersion));
  }
  if (bytes.size() < 8 + kMagic.size() + 4) fail(ErrorCode::CorruptFile, "model file truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != fnv1a(body)) fail(ErrorCode::CorruptFile, "model checksum mismatch");

  SavedModel m;
  auto& p = m.params;
  p.vocab = r.u64();
  p.dim = r.u64();
  p.classes = r.u64();
  const auto edge_params = r.u64();
  p.rounds = r.u64();
  m.window = r.u64();
  m.min_edge_frequency = r.u64();
  m.class_mode = r.u8() == 0 ? ClassMode::Level : ClassMode::StoryPointLabels;
  m.text_mode = r.u8() == 0 ? TextMode::Raw : TextMode::VerbNoun;
  m.project = r.str();
  if (expected_dim && *expected_dim != p.dim) {
    fail(ErrorCode::DimensionMismatch, "model has dimension " + std::to_string(p.dim) +
                                           ", configuration expects " +
                                           std::to_string(*expected_dim));
  }
  // Every array must fit in what is left of the file.
  const auto total = p.vocab * p.dim + edge_params + p.vocab + p.classes * p.dim + p.classes;
  if (p.vocab == 0 || p.dim == 0 || p.classes == 0 || total > bytes.size() / 8) {
    fail(ErrorCode::CorruptFile, "model header dimensions are inconsistent with file size");
  }

  for (std::size_t i = 0; i < p.vocab; ++i) {
    auto token = r.str();
    const auto count = r.u64();
    if (i == 0) {
      if (token != kUnknownToken) fail(ErrorCode::CorruptFile, "vocabulary must start with <unk>");
      continue;
    }
    if (m.vocabulary.add(token, count) != i) fail(ErrorCode::CorruptFile, "duplicate vocabulary token");
  }
  const auto n_entries = r.count(20);
  std::vector<std::pair<std::uint64_t, EdgeTable::Entry>> entries;
  entries.reserve(n_entries);
  for (std::uint64_t i = 0; i < n_entries; ++i) {
    const auto key = r.u64();
    const auto count = r.u64();
    const auto index = r.u32();
    if (index >= edge_params) fail(ErrorCode::CorruptFile, "edge index out of range");
    entries.push_back({key, {count, index}});
  }
  m.edges = EdgeTable::from_entries(entries, m.min_edge_frequency, m.window);
  if (m.class_mode == ClassMode::StoryPointLabels) {
    for (std::size_t c = 0; c < p.classes; ++c) m.class_values.push_back(r.i32());
  }
  p.embeddings = r.f64s(p.vocab * p.dim);
  p.edge_weights = r.f64s(edge_params);
  p.gates = r.f64s(p.vocab);
  p.classifier = r.f64s(p.classes * p.dim);
  p.bias = r.f64s(p.classes);
  if (r.remaining() != 8) fail(ErrorCode::CorruptFile, "unexpected trailing bytes in model file");
  return m;
}

SavedModel load_model(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  return deserialize_model(read_file_bytes(path), expected_dim);
}

}  // namespace storygraph
