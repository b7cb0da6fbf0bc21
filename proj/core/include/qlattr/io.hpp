#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qlattr/partition.hpp"
#include "qlattr/transfer.hpp"

namespace qlattr {

/// One serialized leaf: depth, center, radius and (for measure files) the
/// invariant-measure weight of its box.
struct LeafRow {
    int depth = 0;
    Vec center;
    Vec radius;
    double measure = 0.0;
};

struct CoveringData {
    int dim = 0;
    std::vector<LeafRow> rows;
    bool has_measure = false;
};

/// %.17g — shortest decimal that round-trips a double exactly.
std::string format_g17(double v);

/// Covering CSV: header `depth,c1..cn,r1..rn`, one record per live leaf in
/// index order, 17-significant-digit floats. Measure files append a
/// `measure` column.
void write_covering_csv(std::ostream& os, const BoxPartition& p);
void write_measure_csv(std::ostream& os, const BoxPartition& p, std::span<const double> alpha);
CoveringData read_covering_csv(std::istream& is);

/// Rebuild the partition a covering CSV was written from. The root box and
/// exclusions come from the experiment config; each row is re-located by
/// center descent and must reproduce its center/radius exactly.
BoxPartition partition_from_rows(const Box& root, const CoveringData& data,
                                 std::vector<Box> excluded = {});

/// Diagnostic matrix dump: `k,l,p_kl` triplets (1-based indices) followed by
/// one `leak,l,value` line per column; a leading comment carries d, N, M,
/// seed and epsilon.
void write_matrix_csv(std::ostream& os, const TransitionMatrix& P);

struct MatrixCsvData {
    std::int64_t dim = 0;
    int points_per_box = 0;
    int param_samples = 0;
    std::vector<std::vector<std::pair<std::int32_t, double>>> columns; // 0-based
    std::vector<double> leak;
};
MatrixCsvData read_matrix_csv(std::istream& is);

} // namespace qlattr
