#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "afflab/errors.hpp"
#include "afflab/matrix.hpp"
#include "afflab/symbolic.hpp"

namespace afflab {

/// On-disk form of a matrix tuple: JSON with fields d, N, matrices (row-major
/// entry arrays), optional label and cap. N = 1 is accepted only when the
/// document is flagged "reduced": true (a single-map remainder of a drop).
struct TupleDocument {
    int d = 0;
    int n_maps = 0;
    std::vector<std::vector<double>> matrices;
    std::optional<std::string> label;
    std::optional<double> cap;
    bool reduced = false;
};

inline TupleDocument parse_tuple_document(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("tuple document: invalid JSON: ") + e.what());
    }
    TupleDocument doc;
    try {
        if (!j.is_object()) throw InputError("tuple document: top level must be an object");
        doc.d = j.at("d").get<int>();
        doc.n_maps = j.at("N").get<int>();
        if (!j.at("matrices").is_array())
            throw InputError("tuple document: 'matrices' must be an array");
        for (const auto& m : j.at("matrices"))
            doc.matrices.push_back(m.get<std::vector<double>>());
        if (j.contains("label")) doc.label = j.at("label").get<std::string>();
        if (j.contains("cap")) doc.cap = j.at("cap").get<double>();
        if (j.contains("reduced")) doc.reduced = j.at("reduced").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("tuple document: bad schema: ") + e.what());
    }

    if (doc.d < 1) throw InputError("tuple document: d must be >= 1");
    if (doc.n_maps != static_cast<int>(doc.matrices.size()))
        throw InputError("tuple document: N does not match the number of matrices");
    if (doc.n_maps < 2 && !doc.reduced)
        throw InputError("tuple document: N must be >= 2 unless flagged as reduced");
    if (doc.n_maps < 1) throw InputError("tuple document: need at least one matrix");
    for (std::size_t i = 0; i < doc.matrices.size(); ++i) {
        if (static_cast<int>(doc.matrices[i].size()) != doc.d * doc.d)
            throw InputError("tuple document: matrix " + std::to_string(i + 1) + " has " +
                             std::to_string(doc.matrices[i].size()) + " entries, expected d*d = " +
                             std::to_string(doc.d * doc.d));
        for (double x : doc.matrices[i])
            if (!std::isfinite(x))
                throw InputError("tuple document: matrix " + std::to_string(i + 1) +
                                 " has non-finite entries");
    }
    return doc;
}

inline std::string serialize_tuple_document(const TupleDocument& doc) {
    nlohmann::json j;
    j["d"] = doc.d;
    j["N"] = doc.n_maps;
    j["matrices"] = doc.matrices;
    if (doc.label) j["label"] = *doc.label;
    if (doc.cap) j["cap"] = *doc.cap;
    if (doc.reduced) j["reduced"] = true;
    return j.dump(2) + "\n";
}

inline MatrixTuple to_matrix_tuple(const TupleDocument& doc) {
    std::vector<SquareMatrix> maps;
    maps.reserve(doc.matrices.size());
    for (const std::vector<double>& entries : doc.matrices)
        maps.emplace_back(doc.d, entries);
    return doc.reduced ? MatrixTuple::create_reduced(std::move(maps), doc.cap)
                       : MatrixTuple::create(std::move(maps), doc.cap);
}

inline TupleDocument to_document(const MatrixTuple& t, std::optional<std::string> label = {}) {
    TupleDocument doc;
    doc.d = t.dim;
    doc.n_maps = t.count();
    for (const SquareMatrix& m : t.maps) doc.matrices.push_back(m.a);
    doc.label = std::move(label);
    doc.cap = t.contraction_cap;
    doc.reduced = t.count() < 2;
    return doc;
}

// ---------------------------------------------------------------------------
// CSV emission (RFC-4180 style: header row, comma separator, '.' decimal)
// ---------------------------------------------------------------------------

/// 17 significant digits: round-trip exact for doubles.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) { append_row(header); }

    void row(const std::vector<std::string>& cells) { append_row(cells); }

    const std::string& str() const { return out_; }

private:
    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }
    std::string out_;
};

}  // namespace afflab
