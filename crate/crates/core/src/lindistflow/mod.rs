//! LinDist3Flow constraint emission, voltage sensitivities and plant solvers.

pub mod ac;
mod emit;
mod feasibility;
mod plant;
mod sensitivity;

pub use ac::{
    ac_branch_magnitudes, balanced, solve_ac_fixed_point, AcMethod, AcOptions, AcSolution,
    PhaseVoltages, C64,
};
pub use emit::{
    emit_flow_constraints, master_indices, Binding, CouplingRow, EmitError, FlowOptions, FlowVars,
    LinExpr, PhasePairs, PhaseVars, RowWriter, XIdx,
};
pub use feasibility::{check_feasibility, headroom_dispatch, FeasibilityReport, Fidelity};
pub use plant::{
    build_tree, energized_ccs, solve_linear_power_flow, BranchFlow, CcTree, Dispatch, Edge,
    LinearFlow, PlantCc, PlantError, Topology, TreeLink,
};
pub use sensitivity::{sensitivity_from, voltage_sensitivity, VoltageSensitivity};
