#pragma once

// JSON persistence for spaces, point sets, partitions of unity, cell
// assignments and operators.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roelab/cells.hpp"
#include "roelab/roe.hpp"

namespace roelab::io {

using nlohmann::json;

inline json to_json(const TorusSpace& s)
{
    json bp = json::array();
    for (int k = 0; k < s.dim(); ++k) bp.push_back(s.basepoint()[static_cast<std::size_t>(k)]);
    return {{"dim", s.dim()}, {"side", s.side()}, {"grid_n", s.grid_n()}, {"basepoint", bp}};
}

inline Point point_from_json(const json& j)
{
    if (!j.is_array() || j.empty() || j.size() > kMaxDim) throw Error("point must be an array of 1 or 2 numbers");
    Point p{0.0, 0.0};
    for (std::size_t k = 0; k < j.size(); ++k) p[k] = j[k].get<double>();
    return p;
}

inline TorusSpace space_from_json(const json& j)
{
    try {
        const Point bp = j.contains("basepoint") ? point_from_json(j.at("basepoint")) : Point{0.0, 0.0};
        return TorusSpace(j.at("dim").get<int>(), j.at("side").get<double>(), j.at("grid_n").get<int>(), bp);
    } catch (const json::exception& e) {
        throw Error(std::string("bad space config: ") + e.what());
    }
}

inline json points_to_json(const TorusSpace& s, std::span<const Point> pts)
{
    json arr = json::array();
    for (const auto& p : pts) {
        json q = json::array();
        for (int k = 0; k < s.dim(); ++k) q.push_back(p[static_cast<std::size_t>(k)]);
        arr.push_back(q);
    }
    return arr;
}

inline std::vector<Point> points_from_json(const json& arr)
{
    std::vector<Point> out;
    for (const auto& q : arr) out.push_back(point_from_json(q));
    return out;
}

inline json matrix_to_json(const Matrix& m)
{
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const json& j)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("matrix payload has the wrong length");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
    return m;
}

/// Parses a JSON document; syntax errors name the byte offset.
inline json parse(const std::string& text, const std::string& origin = "input")
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("parse error in " + origin + " at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

inline json read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

inline void write_file(const std::string& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(1) << '\n';
}

// Point sets: {"space": {...}, "points": [[x], ...]}.

inline json to_json(const DeloneSet& D)
{
    return {{"space", to_json(D.space())}, {"points", points_to_json(D.space(), D.points())}};
}

inline DeloneSet delone_from_json(const json& j)
{
    try {
        return DeloneSet(space_from_json(j.at("space")), points_from_json(j.at("points")));
    } catch (const json::exception& e) {
        throw Error(std::string("bad point set: ") + e.what());
    }
}

// Partitions of unity: header, sites and phi as a nodes x sites matrix.

inline json to_json(const PartitionOfUnity& P)
{
    json header = {{"grid_n", P.space.grid_n()}, {"sites", P.delone.size()}, {"r", P.r},
                   {"R", P.R},                   {"dim", P.space.dim()},     {"side", P.space.side()}};
    return {{"header", header}, {"delone", to_json(P.delone)}, {"phi", matrix_to_json(P.phi)}};
}

inline PartitionOfUnity pou_from_json(const json& j)
{
    try {
        const auto D = delone_from_json(j.at("delone"));
        const auto& h = j.at("header");
        if (h.at("grid_n").get<int>() != D.space().grid_n() || h.at("sites").get<std::size_t>() != D.size())
            throw Error("partition header does not match its point set");
        PartitionOfUnity P{D.space(), D, matrix_from_json(j.at("phi")), h.at("r").get<double>(),
                           h.at("R").get<double>(), {}, false};
        if (P.phi.rows() != static_cast<Eigen::Index>(P.space.num_nodes()) ||
            P.phi.cols() != static_cast<Eigen::Index>(D.size()))
            throw Error("partition matrix has the wrong shape");
        P.lipschitz_est = detail::column_lipschitz(P.space, P.phi);
        P.coarse_grid_warning = !(P.space.step() < P.r / 12);
        return P;
    } catch (const json::exception& e) {
        throw Error(std::string("bad partition of unity: ") + e.what());
    }
}

// Cells: {"assign": [...]}.

inline json to_json(const CellPartition& C) { return {{"assign", C.assign}}; }

inline std::vector<std::size_t> assign_from_json(const json& j)
{
    try {
        return j.at("assign").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw Error(std::string("bad cell file: ") + e.what());
    }
}

// Operators: {"kind": "grid"|"sites", "space", ["points"], "matrix"}.

inline json to_json(const GridOperator& S)
{
    return {{"kind", "grid"}, {"space", to_json(S.space)}, {"matrix", matrix_to_json(S.M)}};
}

inline json to_json(const FinitePropOperator& T)
{
    return {{"kind", "sites"},
            {"space", to_json(T.sites.space())},
            {"points", points_to_json(T.sites.space(), T.sites.points())},
            {"matrix", matrix_to_json(T.M)}};
}

inline GridOperator grid_operator_from_json(const json& j)
{
    try {
        if (j.at("kind").get<std::string>() != "grid") throw Error("expected a grid operator");
        GridOperator S{space_from_json(j.at("space")), matrix_from_json(j.at("matrix"))};
        const auto n = static_cast<Eigen::Index>(S.space.num_nodes());
        if (S.M.rows() != n || S.M.cols() != n) throw Error("grid operator has the wrong shape");
        return S;
    } catch (const json::exception& e) {
        throw Error(std::string("bad operator file: ") + e.what());
    }
}

inline FinitePropOperator site_operator_from_json(const json& j)
{
    try {
        if (j.at("kind").get<std::string>() != "sites") throw Error("expected a site operator");
        DeloneSet D(space_from_json(j.at("space")), points_from_json(j.at("points")));
        return FinitePropOperator(std::move(D), matrix_from_json(j.at("matrix")));
    } catch (const json::exception& e) {
        throw Error(std::string("bad operator file: ") + e.what());
    }
}

} // namespace roelab::io
