#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "storygraph/embeddings.hpp"
#include "storygraph/gnn.hpp"
#include "storygraph/graph.hpp"
#include "storygraph/trainer.hpp"

namespace storygraph {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Everything needed to rebuild graphs for unseen documents and predict.
struct SavedModel {
  ModelParameters params;
  std::size_t window = kDefaultWindow;
  std::uint64_t min_edge_frequency = kDefaultMinEdgeFrequency;
  ClassMode class_mode = ClassMode::Level;
  TextMode text_mode = TextMode::Raw;
  std::string project;
  Vocabulary vocabulary;
  EdgeTable edges;
  std::vector<int> class_values;  // story point per class (story-point mode only)
};

/// Binary container, little-endian throughout:
///   magic "SGNNMODL", u32 version,
///   u64 V, u64 d, u64 C, u64 E, u64 rounds, u64 w, u64 k, u8 class mode, u8 text mode,
///   string project,
///   V x (string token, u64 count),
///   u64 n, n x (u64 pair key, u64 count, u32 index),
///   C x i32 class value (only when class mode is story-point),
///   f64 arrays: embeddings, edge weights, gates, classifier, bias,
///   u64 FNV-1a checksum of all preceding bytes.
/// Strings are u32 length + bytes. Doubles are stored bit-exactly.
void save_model(const std::filesystem::path& path, const SavedModel& model);
std::string serialize_model(const SavedModel& model);

/// Throws VersionMismatch on a foreign version, CorruptFile on truncation or
/// checksum failure, DimensionMismatch when `expected_dim` disagrees.
SavedModel load_model(const std::filesystem::path& path,
                      std::optional<std::size_t> expected_dim = std::nullopt);
SavedModel deserialize_model(std::string_view bytes,
                             std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace storygraph
