#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swing/common.hpp"

namespace swing {

enum class BusType { PQ, PV, Slack };
enum class LoadCategory { Induction, FreqTimeDependent, ConstantZI, Remaining };

struct BusRecord {
    int id = 0;
    BusType type = BusType::PQ;
    cplx shunt{0.0, 0.0};  // p.u. admittance to ground
    double v_set = 1.0;    // |V| setpoint for PV/slack, initial guess otherwise
    double angle_set = 0.0;
    bool operator==(const BusRecord&) const = default;
};

struct BranchRecord {
    int from = 0, to = 0;
    cplx y_series{0.0, 0.0};  // (conductance, susceptance)
    double b_charging = 0.0;  // total line charging, split half per end
    bool in_service = true;
    bool operator==(const BranchRecord&) const = default;
};

struct GeneratorRecord {
    int bus = 0;
    double M = 0.0, D = 0.0;        // s^2/rad p.u., p.u.
    double g_ii = 0.0, b_ii = 0.0;  // internal admittance, the Ibus link is g_ii + j b_ii
    double E = 0.0;                 // internal voltage magnitude
    double p_gen = 0.0;             // scheduled output for the power flow (PV buses)
    std::optional<double> p_mech;   // if absent, set to p_elec at the pre-fault state
    bool operator==(const GeneratorRecord&) const = default;
};

// One physical load.  Which fields matter depends on the category:
//   Induction          p, q plus machine-equivalent M, D, g, b, E (negative generator)
//   FreqTimeDependent  m, d0, m_ref and link admittance g + j b; d0 joins Remaining
//   ConstantZI         i_cc, y_ci
//   Remaining          p, q at the operating voltage, admittance_fraction in [0,1]
struct LoadRecord {
    int bus = 0;
    LoadCategory category = LoadCategory::Remaining;
    double p = 0.0, q = 0.0;
    cplx i_cc{0.0, 0.0}, y_ci{0.0, 0.0};
    double admittance_fraction = 1.0;
    double m = 0.0, d0 = 0.0;
    std::optional<double> m_ref;
    double M = 0.0, D = 0.0, g = 0.0, b = 0.0, E = 0.0;
    bool operator==(const LoadRecord&) const = default;
};

enum class InternalVoltage { Table, PowerFlow };

struct CaseOptions {
    bool lossless = false;             // drop series conductance of network branches
    double fault_admittance = 1.0e4;   // p.u. to ground
    double com_threshold = 0.129;      // rad
    double m_ref_default = 1.0;        // s^2/rad p.u.
    InternalVoltage internal_voltage = InternalVoltage::Table;
    bool operator==(const CaseOptions&) const = default;
};

struct RawCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<GeneratorRecord> generators;
    std::vector<LoadRecord> loads;
    CaseOptions options;
    bool operator==(const RawCase&) const = default;

    int bus_index(int id) const;  // throws ValidationError on unknown id
};

RawCase parse_case(const std::string& text);
std::string serialize_case(const RawCase& raw);
RawCase load_case_file(const std::string& path);
void validate_case(const RawCase& raw);

enum class BusRole { Ibus, Kbus, Mbus };
enum class UnitKind { Generator, Induction, FreqLoad };

struct ModelNode {
    BusRole role = BusRole::Mbus;
    int bus_id = -1;     // original id; -1 for Ibuses and inserted Mbuses
    int raw_index = -1;  // index into RawCase::buses
};

struct ModelBranch {
    int a = 0, b = 0;  // model node indices
    cplx y{0.0, 0.0};
    double b_half_a = 0.0, b_half_b = 0.0;
    int source = -1;  // RawCase branch index, -1 for Ibus links
    bool in_service = true;
};

// One dynamic unit per Ibus: machines (generators, induction loads) first, then
// frequency/time-dependent loads.
struct DynamicUnit {
    UnitKind kind = UnitKind::Generator;
    int source = -1;     // generator or load record index
    int bus_id = 0;
    int node = -1;       // Ibus node
    int kbus_node = -1;  // attached Kbus node
    int k = -1;          // position among Kbuses
    double M = 0.0, D = 0.0, g = 0.0, b = 0.0, E = 0.0;
    std::optional<double> p_mech;
    double p_sched = 0.0;  // power-flow injection (negative for loads)
    cplx y_link{0.0, 0.0};
    double ymag = 0.0, gamma = 0.0;
};

struct LoadSet {
    struct Induction {
        int bus;
        int unit;  // index into NetworkModel::units
        double p, q;
    };
    struct FreqDependent {
        int bus;
        int unit;
        double m, d0, m_ref;
    };
    struct ConstantCI {
        int bus;
        cplx i_cc, y_ci;
    };
    struct Remaining {
        int bus;
        cplx i0, y0;
    };
    std::vector<Induction> induction;
    std::vector<FreqDependent> freq_time_dependent;
    std::vector<ConstantCI> constant_ci;
    std::vector<Remaining> remaining;
};

struct NetworkModel {
    RawCase raw;
    std::vector<ModelNode> nodes;  // Ibuses, then Kbuses, then Mbuses
    std::vector<ModelBranch> branches;
    std::vector<DynamicUnit> units;  // one per Ibus, same order as the Ibus nodes
    int NI = 0;  // machine Ibuses (generators + induction loads)
    int ND = 0;  // frequency/time-dependent load Ibuses
    int NK = 0, NM = 0;
    int Nb_original = 0;
    int n_inserted = 0;
    std::map<int, int> bus_node;          // original bus id -> model node
    std::map<int, cplx> fault_admittance;  // model node -> admittance to ground
    std::optional<LoadSet> loads;

    int n_ibus() const { return NI + ND; }
    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int km_offset() const { return n_ibus(); }  // first Kbus node index
};

// Series admittance with the resistance removed (same reactance).
cplx lossless_admittance(cplx y);

NetworkModel build_network_model(const RawCase& raw);

// Category III/IV loads folded into (i0, y0) pairs.  `voltages` are the
// operating bus voltages in RawCase::buses order (the Taylor point).
LoadSet categorize_loads(const RawCase& raw, const NetworkModel& model, const CVec& voltages);

struct PartitionedAdmittance {
    CMat Y;  // full model matrix over all nodes (branches, links, shunts, charging)
    CMat Y_II, Y_IK, Y_KI, Y_KK, Y_KM, Y_MK, Y_MM;
    CVec y0_K, y0_M;  // load-derived shunts, fault admittances included
    CVec i0_K, i0_M;  // constant load currents (drawn)
    std::vector<bool> isolated;  // Kbus/Mbus nodes with no in-service connection
};

PartitionedAdmittance partition_admittance(const NetworkModel& model, const LoadSet& loads);

// (v_K; v_M) = H * w + v^I in stacked real form.  Columns of the I-maps are the
// machine Ibuses (loss frame); the D-maps hold the frequency-dependent loads.
struct VoltageMap {
    int NI = 0, ND = 0, NK = 0, NM = 0;
    CMat Hc;      // (NK+NM) x (NI+ND), loss-frame Ibus voltages -> bus voltages
    CVec offset;  // (NK+NM)
    Mat H_KI, H_MI;  // 2NK x 2NI, 2NM x 2NI
    Mat H_KD, H_MD;  // 2NK x 2ND, 2NM x 2ND
    Vec vK_I, vM_I;  // 2NK, 2NM
    Mat R;           // 2NI x 2NI, loss frame -> actual frame
    Vec gamma;       // NI + ND

    // Complex voltages at every Kbus/Mbus for loss-frame internal voltages.
    CVec bus_voltages(const CVec& w_loss) const;
};

VoltageMap reduce_to_sensitivities(const PartitionedAdmittance& part, const NetworkModel& model);

// Stacked real helpers: [Re; Im] ordering, all real parts first.
Vec stack(const CVec& v);
CVec unstack(const Vec& v);
Mat stack_operator(const CMat& A);

// Partitioned model plus its sensitivity maps; what every dynamic stage needs.
struct NetworkState {
    NetworkModel model;
    PartitionedAdmittance part;
    VoltageMap vmap;
};

NetworkState prepare_network(const NetworkModel& model);

}  // namespace swing
