#include "qlattr/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qlattr {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void write_header(std::ostream& os, int n, bool with_measure) {
    os << "depth";
    for (int i = 1; i <= n; ++i) os << ",c" << i;
    for (int i = 1; i <= n; ++i) os << ",r" << i;
    if (with_measure) os << ",measure";
    os << "\n";
}

void write_leaf(std::ostream& os, int depth, const Box& b, const double* measure) {
    os << depth;
    for (int i = 0; i < b.dim(); ++i) os << ',' << format_g17(b.center[i]);
    for (int i = 0; i < b.dim(); ++i) os << ',' << format_g17(b.radius[i]);
    if (measure) os << ',' << format_g17(*measure);
    os << "\n";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("covering csv: malformed number '" + s + "'");
    return v;
}

} // namespace

void write_covering_csv(std::ostream& os, const BoxPartition& p) {
    write_header(os, p.root().dim(), false);
    for (std::size_t i = 0; i < p.leaf_count(); ++i)
        write_leaf(os, p.depth(), p.leaf_box(i), nullptr);
}

void write_measure_csv(std::ostream& os, const BoxPartition& p, std::span<const double> alpha) {
    if (alpha.size() != p.leaf_count())
        throw std::invalid_argument("write_measure_csv: one weight per leaf required");
    write_header(os, p.root().dim(), true);
    for (std::size_t i = 0; i < p.leaf_count(); ++i)
        write_leaf(os, p.depth(), p.leaf_box(i), &alpha[i]);
}

CoveringData read_covering_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("covering csv: empty file");
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "depth")
        throw std::runtime_error("covering csv: missing 'depth' header");
    CoveringData data;
    data.has_measure = !header.empty() && header.back() == "measure";
    const int n = static_cast<int>(header.size() - 1 - (data.has_measure ? 1 : 0)) / 2;
    if (n < 1 || static_cast<int>(header.size()) != 1 + 2 * n + (data.has_measure ? 1 : 0))
        throw std::runtime_error("covering csv: malformed header");
    data.dim = n;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != 1 + 2 * n + (data.has_measure ? 1 : 0))
            throw std::runtime_error("covering csv: wrong field count in row");
        LeafRow row;
        row.depth = static_cast<int>(parse_double(fields[0]));
        row.center = Vec(n);
        row.radius = Vec(n);
        for (int i = 0; i < n; ++i) row.center[i] = parse_double(fields[1 + i]);
        for (int i = 0; i < n; ++i) row.radius[i] = parse_double(fields[1 + n + i]);
        if (data.has_measure) row.measure = parse_double(fields[1 + 2 * n]);
        data.rows.push_back(row);
    }
    return data;
}

BoxPartition partition_from_rows(const Box& root, const CoveringData& data,
                                 std::vector<Box> excluded) {
    if (data.dim != root.dim())
        throw std::runtime_error("covering csv: dimension does not match the configured domain");
    if (data.rows.empty()) return BoxPartition::from_leaves(root, 0, {}, std::move(excluded));
    const int depth = data.rows.front().depth;

    // Recover each leaf's bit-path by descending toward its center.
    std::vector<std::uint64_t> paths;
    paths.reserve(data.rows.size());
    const int n = root.dim();
    for (const LeafRow& rrow : data.rows) {
        if (rrow.depth != depth) throw std::runtime_error("covering csv: mixed leaf depths");
        Vec c = root.center;
        Vec r = root.radius;
        std::uint64_t path = 0;
        for (int level = 0; level < depth; ++level) {
            const int s = level % n;
            r[s] *= 0.5;
            if (rrow.center[s] < c[s]) {
                c[s] -= r[s];
            } else {
                c[s] += r[s];
                path |= 1ULL << level;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (c[i] != rrow.center[i] || r[i] != rrow.radius[i])
                throw std::runtime_error("covering csv: leaf does not align with the configured domain");
        }
        paths.push_back(path);
    }
    return BoxPartition::from_leaves(root, depth, std::move(paths), std::move(excluded));
}

void write_matrix_csv(std::ostream& os, const TransitionMatrix& P) {
    os << "# d=" << P.dim << " N=" << P.points_per_box << " M=" << P.param_samples
       << " seed=" << P.seed << " eps=" << format_g17(P.epsilon) << "\n";
    os << "k,l,p_kl\n";
    for (std::int64_t l = 0; l < P.dim; ++l) {
        for (std::int64_t e = P.col_ptr[l]; e < P.col_ptr[l + 1]; ++e)
            os << (P.row[e] + 1) << ',' << (l + 1) << ',' << format_g17(P.value(e)) << "\n";
        os << "leak," << (l + 1) << ',' << format_g17(P.leak_fraction(l)) << "\n";
    }
}

MatrixCsvData read_matrix_csv(std::istream& is) {
    MatrixCsvData data;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                if (tok.rfind("d=", 0) == 0) data.dim = std::stoll(tok.substr(2));
                if (tok.rfind("N=", 0) == 0) data.points_per_box = std::stoi(tok.substr(2));
                if (tok.rfind("M=", 0) == 0) data.param_samples = std::stoi(tok.substr(2));
            }
            data.columns.resize(data.dim);
            data.leak.assign(data.dim, 0.0);
            continue;
        }
        if (line.rfind("k,l,", 0) == 0) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) throw std::runtime_error("matrix csv: malformed row");
        const std::int64_t l = std::stoll(fields[1]) - 1;
        if (l < 0 || l >= data.dim) throw std::runtime_error("matrix csv: column out of range");
        if (fields[0] == "leak") {
            data.leak[l] = parse_double(fields[2]);
        } else {
            const std::int32_t k = static_cast<std::int32_t>(std::stoll(fields[0]) - 1);
            data.columns[l].emplace_back(k, parse_double(fields[2]));
        }
    }
    return data;
}

} // namespace qlattr
