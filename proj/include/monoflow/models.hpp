#pragma once

#include "monoflow/monopole.hpp"
#include "monoflow/symmetry.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace monoflow {

enum class ModelKind { even_dirac, odd_chiral, ssh, custom_polynomial };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// A monomial in the shift symbols: +k stands for S_k, -k for S_k^* (k = 1..d).
struct HoppingTerm {
    std::vector<int> word;
    CMat coefficient;  // acts on the orbital fiber, identity on the Clifford fiber
};

struct ModelSpec {
    ModelKind kind = ModelKind::even_dirac;
    int d = 2;
    double mass = 1.0;
    double fermi_level = 0.0;
    std::vector<HoppingTerm> hopping;  // filled by the builders for the named kinds
    CMat potential;                    // constant site matrix on the orbital fiber
};

// Orbital-fiber representation nu_1..nu_d (with grading nu_0 in even d).
CliffordRep orbital_rep(const ModelSpec& spec);
// Fills hopping and potential for even_dirac / odd_chiral; custom specs pass through.
ModelSpec expand_model(const ModelSpec& spec);

// Critical masses {-d, -d+2, ..., d}; true when m is within tol of one of them.
bool near_critical_mass(int d, double m, double tol = 1e-6);

// Memoized phase tables over one box geometry, optionally persisted.
class PhaseProvider {
public:
    PhaseProvider(LatticeBox geometry, TransportOptions opts = {}, std::filesystem::path dir = {});
    const PhaseCache& get(double alpha);
    const LatticeBox& geometry() const { return geometry_; }

private:
    LatticeBox geometry_;
    TransportOptions opts_;
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<double, std::unique_ptr<PhaseCache>> cache_;
};

// Delta(S^alpha_1, ..., S^alpha_d) + W on fiber (orbital) x (Clifford block).
// phases == nullptr gives alpha = 0.
LatticeOperator build_polynomial(const ModelSpec& spec, const LatticeBox& geometry, const PhaseCache* phases,
                                 GammaBlock block = GammaBlock::full);

// even d: h_alpha on orbital x upper Gamma block (block = upper), h_{-alpha} on the lower
// block, or the full H_alpha = diag(h_alpha, h_{-alpha}) on orbital x gamma (block = full).
LatticeOperator build_even_dirac(const ModelSpec& spec, const LatticeBox& geometry, const PhaseCache* phases,
                                 GammaBlock block);

// odd d: A_alpha on orbital x gamma.
LatticeOperator build_odd_chiral_A(const ModelSpec& spec, const LatticeBox& geometry, const PhaseCache* phases);

// [[0, A], [A^*, 0]] with the chiral index outermost in each site fiber.
LatticeOperator chiral_hamiltonian(const LatticeOperator& A);
LatticeOperator chiral_grading(const LatticeBox& box_of_A);
// F extended to the doubled fiber as 1_2 (x) F
LatticeOperator double_fiber(const LatticeOperator& op);

struct HamiltonianPath {
    ModelSpec spec;
    std::vector<double> alphas;
    std::function<LatticeOperator(double)> at;
};

// SSH chain with sites n = -half..half.
struct SshOperators {
    LatticeOperator H;  // chiral Hamiltonian with S^alpha
    LatticeOperator U;  // S^alpha
    LatticeOperator F;  // +1 for n > 0, -1 for n <= 0
};
LatticeBox ssh_box(int sites);
SshOperators build_ssh(int sites, double alpha);

// T_alpha of the ChirInd example; the off-diagonal block is S^0 with the (0,1) entry
// replaced by c(alpha) = 1 - 2 alpha, or by (1 - 2 alpha) + i sin(pi alpha) for the detour.
// With ring = true the chain is closed by a bond |half><-half| carrying conj(c(alpha)), so
// that the endpoints are invertible on the finite section and A_1 = F A_0 F.
struct ChirIndPath {
    LatticeOperator T;
    LatticeOperator A;
    bool singular = false;  // c(alpha) == 0
};
ChirIndPath chirind_example_path(int sites, double alpha, bool detour, bool ring = false);

// Point-group symmetry of the models, when the monopole is centered in the box.
// even_dirac: quarter turns on orbital x (upper block) fiber, or quarter turns x Gamma on the full fiber.
// odd_chiral (d = 3): the rotation group of the cube on orbital x gamma.
SymmetryGroup model_symmetry(const ModelSpec& spec, GammaBlock block);

}  // namespace monoflow
