#pragma once

#include "monoflow/clifford.hpp"
#include "monoflow/types.hpp"

#include <vector>

namespace monoflow {

// Sites x = n + offset with n integer and ||x||_inf <= radius, ordered
// lexicographically (first coordinate slowest).
class LatticeBox {
public:
    LatticeBox() = default;
    LatticeBox(int d, int radius, std::vector<double> offset, int fiber_dim);
    static LatticeBox half_integer(int d, int radius, int fiber_dim = 1);

    int d() const { return d_; }
    int radius() const { return radius_; }
    int fiber_dim() const { return fiber_dim_; }
    const std::vector<double>& offset() const { return offset_; }
    int num_sites() const { return num_sites_; }
    Eigen::Index dim() const { return Eigen::Index(num_sites_) * fiber_dim_; }
    int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }

    LatticeBox with_fiber(int fiber_dim) const;

    // integer part n of site s along axis
    int coord(int site, int axis) const { return coords_[std::size_t(site) * d_ + axis]; }
    double position(int site, int axis) const { return coords_[std::size_t(site) * d_ + axis] + offset_[axis]; }
    RVec position(int site) const;
    double sup_norm(int site) const;
    double norm(int site) const { return position(site).norm(); }

    // -1 when the integer point lies outside the box
    int index(const std::vector<int>& n) const;
    int neighbor(int site, int axis, int step) const;

    // outer shell: ||x||_inf > radius - width
    bool in_shell(int site, double width) const { return sup_norm(site) > radius_ - width; }

    bool same_geometry(const LatticeBox& other) const;

private:
    int d_ = 0;
    int radius_ = 0;
    int fiber_dim_ = 1;
    int num_sites_ = 0;
    std::vector<double> offset_;
    std::vector<int> lo_, hi_;
    std::vector<int> coords_;
};

enum class OpFlag { none, hermitian, unitary, partial_isometry };

struct LatticeOperator {
    LatticeBox box;
    SpMat data;
    OpFlag flag = OpFlag::none;

    Eigen::Index dim() const { return data.rows(); }
    CMat dense() const { return CMat(data); }
    // deviation from the flagged property (0 for OpFlag::none)
    double flag_defect() const;
};

// Block-diagonal operator with block(x) acting on the last rep.fiber_dim fiber
// indices and the identity on the remaining factor.
LatticeOperator dirac_operator(const LatticeBox& box, const CliffordRep& rep);
LatticeOperator dirac_phase(const LatticeOperator& D);

struct GradedSplit {
    LatticeOperator V;          // lower-left block of F in the Gamma basis
    std::vector<Eigen::Index> upper;  // indices of Gamma = +1
    std::vector<Eigen::Index> lower;
};
GradedSplit split_F(const LatticeOperator& F, const CliffordRep& rep);

LatticeOperator hardy_projection(const LatticeOperator& F);

// identity on the first factor, `local` on the Clifford factor, at every site
LatticeOperator site_constant(const LatticeBox& box, const CMat& local);

// Largest |entry| outside the site-diagonal blocks.
double off_site_norm(const LatticeOperator& op);

}  // namespace monoflow
