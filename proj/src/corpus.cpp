#include "claimclust/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "claimclust/error.hpp"
#include "io_util.hpp"

namespace claimclust {

using nlohmann::json;

Corpus::Corpus(std::vector<Claim> claims) : claims_(std::move(claims)) {
    index_.reserve(claims_.size());
    for (std::size_t i = 0; i < claims_.size(); ++i) {
        const Claim& c = claims_[i];
        if (c.id.empty()) throw InputError("claim " + std::to_string(i + 1) + ": empty id");
        if (c.text.empty()) throw InputError("claim '" + c.id + "': empty text");
        if (c.lang.empty()) throw InputError("claim '" + c.id + "': empty lang");
        if (!index_.emplace(c.id, static_cast<Index>(i)).second) {
            throw InputError("duplicate claim id '" + c.id + "' at line " + std::to_string(i + 1));
        }
    }
}

std::optional<Index> Corpus::position(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> Corpus::ids() const {
    std::vector<std::string> out;
    out.reserve(claims_.size());
    for (const auto& c : claims_) out.push_back(c.id);
    return out;
}

CorpusCounts Corpus::counts() const {
    std::unordered_set<std::string> clusters;
    std::unordered_set<std::string> langs;
    for (const auto& c : claims_) {
        if (c.gt_cluster) clusters.insert(*c.gt_cluster);
        langs.insert(c.lang);
    }
    return {claims_.size(), clusters.size(), langs.size()};
}

bool Corpus::fully_labeled() const {
    return std::all_of(claims_.begin(), claims_.end(), [](const Claim& c) { return c.gt_cluster.has_value(); });
}

std::vector<Index> Corpus::labeled_positions() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < claims_.size(); ++i) {
        if (claims_[i].gt_cluster) out.push_back(static_cast<Index>(i));
    }
    return out;
}

Corpus Corpus::subset(std::span<const Index> positions) const {
    std::vector<Claim> picked;
    picked.reserve(positions.size());
    for (Index p : positions) picked.push_back(claims_.at(static_cast<std::size_t>(p)));
    return Corpus(std::move(picked));
}

const char* to_string(PairLabel label) {
    return label == PairLabel::kSimilar ? "similar" : "dissimilar";
}

PairCounts count_pairs(std::span<const ClaimPair> pairs) {
    PairCounts c;
    for (const auto& p : pairs) {
        (p.label == PairLabel::kSimilar ? c.similar : c.dissimilar) += 1;
    }
    return c;
}

void EmbeddingMatrix::validate() const {
    if (data.cols() < 1) throw InputError("embedding dimension must be >= 1");
    if (static_cast<Index>(ids.size()) != data.rows()) {
        throw InputError("embedding id count " + std::to_string(ids.size()) + " does not match row count " +
                         std::to_string(data.rows()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw InputError("duplicate embedding id '" + id + "'");
    }
    for (Index r = 0; r < data.rows(); ++r) {
        for (Index c = 0; c < data.cols(); ++c) {
            if (!std::isfinite(data(r, c))) {
                throw InputError("non-finite embedding value at row " + std::to_string(r) + ", column " +
                                 std::to_string(c));
            }
        }
    }
}

namespace {

template <typename T>
T required(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw InputError("line " + std::to_string(line) + ": missing required field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw InputError("line " + std::to_string(line) + ": field '" + key + "' has the wrong type");
    }
}

// Calls fn(line_number, object) for each non-blank JSONL line.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected a JSON object");
        }
        fn(line_no, obj);
    }
}

}  // namespace

Corpus load_claims(const std::filesystem::path& path) {
    std::vector<Claim> claims;
    std::unordered_map<std::string, std::size_t> first_line;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        Claim c;
        c.id = required<std::string>(obj, "id", line_no);
        c.text = required<std::string>(obj, "text", line_no);
        c.lang = required<std::string>(obj, "lang", line_no);
        if (c.id.empty() || c.text.empty() || c.lang.empty()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": id, text and lang must be non-empty");
        }
        if (auto it = obj.find("cluster"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) throw InputError("line " + std::to_string(line_no) + ": 'cluster' must be a string");
            c.gt_cluster = it->get<std::string>();
        }
        if (auto it = obj.find("topic"); it != obj.end() && !it->is_null()) {
            if (!it->is_number_integer()) {
                throw InputError("line " + std::to_string(line_no) + ": 'topic' must be an integer");
            }
            c.topic_group = it->get<int>();
        }
        auto [it, inserted] = first_line.emplace(c.id, line_no);
        if (!inserted) {
            throw InputError(path.string() + ": duplicate claim id '" + c.id + "' at line " + std::to_string(line_no) +
                             " (first seen at line " + std::to_string(it->second) + ")");
        }
        claims.push_back(std::move(c));
    });
    return Corpus(std::move(claims));
}

std::vector<ClaimPair> load_pairs(const std::filesystem::path& path, const Corpus& corpus) {
    struct Seen {
        PairLabel label;
        std::size_t line;
    };
    std::map<std::pair<Index, Index>, Seen> seen;
    std::vector<ClaimPair> pairs;
    for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
        const auto a_id = required<std::string>(obj, "a", line_no);
        const auto b_id = required<std::string>(obj, "b", line_no);
        const auto label_str = required<std::string>(obj, "label", line_no);
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        PairLabel label;
        if (label_str == "similar") {
            label = PairLabel::kSimilar;
        } else if (label_str == "dissimilar") {
            label = PairLabel::kDissimilar;
        } else {
            throw InputError(where + "unknown label '" + label_str + "'");
        }
        if (a_id == b_id) throw InputError(where + "self-pair '" + a_id + "'");
        const auto a = corpus.position(a_id);
        const auto b = corpus.position(b_id);
        if (!a) throw InputError(where + "unknown claim id '" + a_id + "'");
        if (!b) throw InputError(where + "unknown claim id '" + b_id + "'");
        const auto key = std::minmax(*a, *b);
        auto [it, inserted] = seen.emplace(key, Seen{label, line_no});
        if (!inserted) {
            if (it->second.label != label) {
                throw InputError(where + "conflicting labels for pair ('" + a_id + "', '" + b_id + "'): " +
                                 to_string(it->second.label) + " at line " + std::to_string(it->second.line) +
                                 ", " + to_string(label) + " at line " + std::to_string(line_no));
            }
            return;
        }
        pairs.push_back({key.first, key.second, label});
    });
    return pairs;
}

namespace {

constexpr char kCevMagic[4] = {'C', 'E', 'V', '1'};
constexpr std::uint32_t kCevVersion = 1;

std::vector<std::string> split_ids(const std::string& blob) {
    std::vector<std::string> out;
    if (blob.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto nl = blob.find('\n', start);
        out.push_back(blob.substr(start, nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return out;
}

}  // namespace

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    io::ByteReader reader(bytes, path.string());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCevMagic, 4) != 0) {
        throw InputError(path.string() + ": bad magic (expected 'CEV1')");
    }
    reader.skip(4);
    const auto version = reader.read<std::uint32_t>("version");
    if (version != kCevVersion) {
        throw InputError(path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto n = reader.read<std::uint64_t>("row count");
    const auto d = reader.read<std::uint32_t>("dimension");
    if (d < 1) throw InputError(path.string() + ": dimension must be >= 1");
    const std::uint64_t payload = n * d * 4;
    if (n > 0 && payload / n / 4 != d) throw InputError(path.string() + ": header sizes overflow");
    if (reader.remaining() < payload) {
        throw InputError(path.string() + ": truncated payload: expected " + std::to_string(payload) +
                         " bytes of float data, found " + std::to_string(reader.remaining()));
    }
    EmbeddingMatrix m;
    m.data.resize(static_cast<Index>(n), static_cast<Index>(d));
    reader.read_floats(m.data.data(), static_cast<std::size_t>(n * d));
    const auto id_len = reader.read<std::uint64_t>("id block length");
    if (reader.remaining() < id_len) {
        throw InputError(path.string() + ": truncated id block: expected " + std::to_string(id_len) +
                         " bytes, found " + std::to_string(reader.remaining()));
    }
    m.ids = split_ids(reader.read_string(static_cast<std::size_t>(id_len)));
    if (reader.remaining() != 0) {
        throw InputError(path.string() + ": " + std::to_string(reader.remaining()) + " trailing bytes");
    }
    if (m.ids.size() != n) {
        throw InputError(path.string() + ": id block holds " + std::to_string(m.ids.size()) + " ids for " +
                         std::to_string(n) + " rows");
    }
    m.validate();
    return m;
}

EmbeddingMatrix align_to_corpus(EmbeddingMatrix matrix, const Corpus& corpus) {
    std::vector<std::string> missing;   // in corpus, not in file
    std::vector<std::string> unknown;   // in file, not in corpus
    std::unordered_map<std::string, Index> row_of;
    row_of.reserve(matrix.ids.size());
    for (std::size_t r = 0; r < matrix.ids.size(); ++r) {
        row_of.emplace(matrix.ids[r], static_cast<Index>(r));
        if (!corpus.position(matrix.ids[r])) unknown.push_back(matrix.ids[r]);
    }
    for (const auto& c : corpus.claims()) {
        if (!row_of.count(c.id)) missing.push_back(c.id);
    }
    if (!missing.empty() || !unknown.empty()) {
        std::ostringstream msg;
        msg << "embedding id set does not match claims: " << missing.size() << " claim id(s) without embedding, "
            << unknown.size() << " embedding id(s) not in claims; offenders:";
        std::size_t listed = 0;
        for (const auto* list : {&missing, &unknown}) {
            for (const auto& id : *list) {
                if (listed == 10) break;
                msg << " '" << id << "'";
                ++listed;
            }
        }
        throw InputError(msg.str());
    }
    EmbeddingMatrix out;
    out.ids = corpus.ids();
    out.data.resize(corpus.size(), matrix.dim());
    for (Index i = 0; i < corpus.size(); ++i) {
        out.data.row(i) = matrix.data.row(row_of.at(out.ids[static_cast<std::size_t>(i)]));
    }
    return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
    return align_to_corpus(read_embeddings(path), corpus);
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    if (matrix.rows() == 0) throw InputError("cannot persist an empty embedding matrix");
    matrix.validate();
    io::ByteWriter w;
    w.write_bytes(kCevMagic, 4);
    w.write<std::uint32_t>(kCevVersion);
    w.write<std::uint64_t>(static_cast<std::uint64_t>(matrix.rows()));
    w.write<std::uint32_t>(static_cast<std::uint32_t>(matrix.dim()));
    w.write_floats(matrix.data.data(), static_cast<std::size_t>(matrix.data.size()));
    std::string blob;
    for (std::size_t i = 0; i < matrix.ids.size(); ++i) {
        if (matrix.ids[i].empty() || matrix.ids[i].find('\n') != std::string::npos) {
            throw InputError("embedding id at row " + std::to_string(i) + " is empty or contains a newline");
        }
        if (i) blob.push_back('\n');
        blob += matrix.ids[i];
    }
    w.write<std::uint64_t>(blob.size());
    w.write_bytes(blob.data(), blob.size());
    io::write_file(path, w.bytes());
}

}  // namespace claimclust
