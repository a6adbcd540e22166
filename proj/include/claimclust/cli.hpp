#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "claimclust/adapter.hpp"
#include "claimclust/autotune.hpp"
#include "claimclust/report.hpp"

namespace claimclust {

// Every field maps 1:1 to a snake_case config key and a --kebab-case flag.
struct RunConfig {
    std::string claims;
    std::string pairs;
    std::string embeddings;
    std::string adapter;     // train: output (default <out_dir>/adapter.c2va); project: input
    std::string out_dir = ".";
    std::string projected;   // project output (default <out_dir>/projected.cev)
    std::string base_embeddings;
    std::string base_assignment;
    std::string assignment;
    std::string dendrogram;

    TrainConfig train;  // its seed is overwritten by `seed`

    bool auto_threshold = false;
    std::optional<double> threshold;
    AutotuneParams autotune;  // its seed is overwritten by `seed`
    Index subset_size = 10000;
    int subsets = 5;

    double band = 0.10;
    Index k_step = 1;
    Index k_true = 0;  // 0: number of ground-truth clusters

    std::string label_filter = "all";
    std::string ward_backend = "on-demand";

    std::uint64_t seed = 0;
    std::uint64_t memory_cap = kDefaultMemoryCapBytes;

    // Applies a config object; unknown keys and type mismatches are InputErrors.
    void merge(const Json& object);
    Json to_json() const;
    void validate() const;
};

inline constexpr const char* kLogEnvVar = "CLAIMCLUST_LOG";

// args excludes the program name. Returns the process exit code:
// 0 success, 2 usage/validation error, 1 runtime error.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace claimclust
