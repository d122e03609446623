#include "storygraph/error.hpp"
#include "storygraph/random.hpp"

namespace storygraph {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidStoryPoint: return "InvalidStoryPoint";
    case ErrorCode::TaggerFailure: return "TaggerFailure";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::UnknownClassIndex: return "UnknownClassIndex";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view a, std::string_view b) {
  std::uint64_t h = 14695981039346656037ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (master >> (8 * i)) & 0xffU;
    h *= 1099511628211ULL;
  }
  h = fnv1a(a, h);
  h = fnv1a("\x1f", h);
  h = fnv1a(b, h);
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace storygraph
