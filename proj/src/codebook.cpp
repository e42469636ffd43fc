// Copyright 2026 The suffixlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "suffixlab/codebook.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace suffixlab {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'M', 'P', 'C'};
constexpr std::uint32_t kMatrixVersion = 1;

std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, std::ostream& os) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (TokenId id = 0; id < entries_.size(); ++id) {
        auto [it, inserted] = index_.emplace(entries_[id].surface, id);
        if (!inserted) {
            throw std::invalid_argument("Vocabulary: duplicate surface '" + entries_[id].surface + "' at ids " +
                                        std::to_string(it->second) + " and " + std::to_string(id));
        }
    }
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Codebook::Codebook(Matrix psi, Vocabulary vocab) : psi_(std::move(psi)), vocab_(std::move(vocab)) {
    if (psi_.cols() == 0) throw std::invalid_argument("Codebook: d_token must be positive");
    if (psi_.rows() != vocab_.size()) {
        throw std::invalid_argument("Codebook: " + std::to_string(psi_.rows()) + " rows but vocabulary has " +
                                    std::to_string(vocab_.size()) + " entries");
    }
    for (std::size_t i = 0; i < psi_.data().size(); ++i) {
        if (!std::isfinite(psi_.data()[i])) {
            throw std::invalid_argument("Codebook: non-finite value in row " + std::to_string(i / psi_.cols()));
        }
    }
}

std::span<const double> Codebook::row(TokenId id) const {
    if (!contains(id)) throw std::out_of_range("Codebook: token id " + std::to_string(id) + " out of range");
    return psi_.row(id);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0) throw std::domain_error("cosine: argument a has zero norm");
    if (nb == 0.0) throw std::domain_error("cosine: argument b has zero norm");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

FilteredVocabulary filter_vocabulary(const Codebook& codebook, TokenId target, std::size_t top_k) {
    if (!codebook.contains(target)) {
        throw std::invalid_argument("filter_vocabulary: target id " + std::to_string(target) + " out of range");
    }
    const auto target_row = codebook.row(target);

    std::vector<std::pair<TokenId, double>> ranked;
    for (TokenId id = 0; id < codebook.size(); ++id) {
        if (!codebook.vocab()[id].word_final) continue;
        const double score = id == target ? 1.0 : cosine(target_row, codebook.row(id));
        ranked.emplace_back(id, score);
    }
    if (top_k > ranked.size()) {
        throw std::invalid_argument("filter_vocabulary: top_k " + std::to_string(top_k) + " exceeds the " +
                                    std::to_string(ranked.size()) + " word-final tokens");
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    FilteredVocabulary out;
    out.target_id = target;
    out.removed_synonyms.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top_k));
    for (auto it = ranked.begin() + static_cast<std::ptrdiff_t>(top_k); it != ranked.end(); ++it) {
        out.allowed_ids.insert(it->first);
    }
    // A non-word-final target is never in the pool, but must stay banned.
    out.allowed_ids.erase(target);
    return out;
}

TokenId nearest_token(const Codebook& codebook, std::span<const double> z, std::span<const TokenId> allowed_sorted) {
    if (allowed_sorted.empty()) throw std::invalid_argument("nearest_token: allowed set is empty");
    if (z.size() != codebook.d_token()) throw std::invalid_argument("nearest_token: dimension mismatch");
    TokenId best = allowed_sorted.front();
    double best_dist = std::numeric_limits<double>::infinity();
    for (TokenId id : allowed_sorted) {
        const double d = squared_distance(codebook.row(id), z);
        if (d < best_dist) {
            best_dist = d;
            best = id;
        }
    }
    return best;
}

TokenId nearest_token(const Codebook& codebook, std::span<const double> z, const std::set<TokenId>& allowed) {
    const std::vector<TokenId> sorted(allowed.begin(), allowed.end());
    return nearest_token(codebook, z, sorted);
}

Matrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open matrix file " + path.string());
    unsigned char header[16];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
        throw std::runtime_error(path.string() + ": truncated header");
    }
    if (std::memcmp(header, kMagic.data(), kMagic.size()) != 0) {
        throw std::runtime_error(path.string() + ": bad magic, expected MMPC");
    }
    const std::uint32_t version = load_u32_le(header + 4);
    if (version != kMatrixVersion) {
        throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t rows = load_u32_le(header + 8);
    const std::uint32_t cols = load_u32_le(header + 12);
    const std::size_t count = static_cast<std::size_t>(rows) * cols;

    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw std::runtime_error(path.string() + ": truncated payload");
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = static_cast<double>(std::bit_cast<float>(load_u32_le(raw.data() + 4 * i)));
    }
    return Matrix(rows, cols, std::move(data));
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write matrix file " + path.string());
    out.write(kMagic.data(), kMagic.size());
    store_u32_le(kMatrixVersion, out);
    store_u32_le(static_cast<std::uint32_t>(m.rows()), out);
    store_u32_le(static_cast<std::uint32_t>(m.cols()), out);
    for (double v : m.data()) store_u32_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)), out);
}

Vocabulary read_vocabulary_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
    std::vector<VocabEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected surface<TAB>flag");
        }
        const std::string flag = line.substr(tab + 1);
        if (flag != "0" && flag != "1") {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": word_final flag must be 0 or 1");
        }
        entries.push_back({line.substr(0, tab), flag == "1"});
    }
    return Vocabulary(std::move(entries));
}

void write_vocabulary_file(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write vocabulary file " + path.string());
    for (const auto& e : vocab.entries()) out << e.surface << '\t' << (e.word_final ? '1' : '0') << '\n';
}

Codebook load_codebook(const std::filesystem::path& matrix_path, const std::filesystem::path& vocab_path) {
    return Codebook(read_matrix_file(matrix_path), read_vocabulary_file(vocab_path));
}

} // namespace suffixlab
