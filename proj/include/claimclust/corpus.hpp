#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimclust/types.hpp"

namespace claimclust {

struct Claim {
    std::string id;
    std::string text;
    std::string lang;
    std::optional<std::string> gt_cluster;
    std::optional<int> topic_group;  // 1 = train, 2 = test
};

struct CorpusCounts {
    std::size_t claims = 0;
    std::size_t clusters = 0;   // distinct ground-truth clusters among labeled claims
    std::size_t languages = 0;
};

// Ordered claim list with an id -> position index. Immutable once built.
class Corpus {
  public:
    Corpus() = default;

    // Throws InputError on empty/duplicate ids, empty text or empty lang.
    explicit Corpus(std::vector<Claim> claims);

    Index size() const { return static_cast<Index>(claims_.size()); }
    bool empty() const { return claims_.empty(); }

    const Claim& operator[](Index pos) const { return claims_[static_cast<std::size_t>(pos)]; }
    const std::vector<Claim>& claims() const { return claims_; }

    std::optional<Index> position(const std::string& id) const;
    std::vector<std::string> ids() const;

    CorpusCounts counts() const;

    bool fully_labeled() const;
    std::vector<Index> labeled_positions() const;

    Corpus subset(std::span<const Index> positions) const;

  private:
    std::vector<Claim> claims_;
    std::unordered_map<std::string, Index> index_;
};

enum class PairLabel { kSimilar, kDissimilar };

const char* to_string(PairLabel label);

// Positions refer to rows of the owning corpus; a < b after loading.
struct ClaimPair {
    Index a = 0;
    Index b = 0;
    PairLabel label = PairLabel::kSimilar;
};

struct PairCounts {
    std::size_t similar = 0;
    std::size_t dissimilar = 0;
};

PairCounts count_pairs(std::span<const ClaimPair> pairs);

// Rows are aligned 1:1 with `ids`.
struct EmbeddingMatrix {
    std::vector<std::string> ids;
    MatrixF data;

    Index rows() const { return data.rows(); }
    Index dim() const { return data.cols(); }

    // Checks ids unique, row count, d >= 1, finiteness. Throws InputError.
    void validate() const;
};

Corpus load_claims(const std::filesystem::path& path);

// Deduplicates unordered pairs; conflicting labels are an error.
std::vector<ClaimPair> load_pairs(const std::filesystem::path& path, const Corpus& corpus);

// Reads a CEV1 file as stored, without corpus alignment.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

// Reads a CEV1 file and reorders rows to corpus order.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Corpus& corpus);

// Reorders `matrix` to corpus order; the id sets must match exactly.
EmbeddingMatrix align_to_corpus(EmbeddingMatrix matrix, const Corpus& corpus);

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

}  // namespace claimclust
