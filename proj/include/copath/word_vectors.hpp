#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "copath/core.hpp"

namespace copath {

/// Frozen token -> vector table. Unknown tokens read as the zero vector.
class WordVectors {
public:
    WordVectors() = default;
    explicit WordVectors(int dim) : dim_(dim) {}

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return table_.size(); }

    void add(const std::string& token, Vector v) {
        if (dim_ == 0) dim_ = static_cast<int>(v.size());
        if (v.size() != dim_)
            input_error("word vector for '" + token + "' has dimension " + std::to_string(v.size()) +
                        ", expected " + std::to_string(dim_));
        if (!v.allFinite()) input_error("word vector for '" + token + "' is not finite");
        table_.insert_or_assign(token, std::move(v));
    }

    bool contains(const std::string& token) const { return table_.count(token) != 0; }

    const Vector* find(const std::string& token) const {
        auto it = table_.find(token);
        return it == table_.end() ? nullptr : &it->second;
    }

    Vector lookup(const std::string& token) const {
        if (const Vector* v = find(token)) return *v;
        return Vector::Zero(dim_);
    }

    /// Mean of the in-vocabulary token vectors; nullopt-like flag via `found`.
    Vector mean(const Tokens& tokens, int* found = nullptr) const {
        Vector acc = Vector::Zero(dim_);
        int n = 0;
        for (const auto& t : tokens) {
            if (const Vector* v = find(t)) {
                acc += *v;
                ++n;
            }
        }
        if (found) *found = n;
        return n ? Vector(acc / n) : acc;
    }

    const std::unordered_map<std::string, Vector>& table() const noexcept { return table_; }

private:
    int dim_ = 0;
    std::unordered_map<std::string, Vector> table_;
};

/// Text format: one `token v1 ... vd` per line. Blank lines are skipped.
inline WordVectors read_word_vectors(std::istream& in, const std::string& origin = "<stream>") {
    WordVectors wv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token)) continue;
        std::vector<double> vals;
        std::string field;
        while (ss >> field) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                input_error(origin + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
            }
        }
        if (vals.empty()) input_error(origin + ":" + std::to_string(lineno) + ": token without vector");
        try {
            wv.add(token, Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        } catch (const Error& e) {
            input_error(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return wv;
}

inline WordVectors load_word_vectors(const std::string& path) {
    std::ifstream in(path);
    if (!in) input_error("cannot open word-vector file " + path);
    return read_word_vectors(in, path);
}

inline void write_word_vectors(std::ostream& out, const WordVectors& wv) {
    std::vector<std::string> keys;
    keys.reserve(wv.size());
    for (const auto& [k, _] : wv.table()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    out.precision(17);
    for (const auto& k : keys) {
        out << k;
        const Vector& v = *wv.find(k);
        for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
        out << '\n';
    }
}

inline void save_word_vectors(const WordVectors& wv, const std::string& path) {
    std::ofstream out(path);
    if (!out) input_error("cannot write word-vector file " + path);
    write_word_vectors(out, wv);
}

}  // namespace copath
