//! Fairness-aware attacker-defender optimization for edge network hardening.
//!
//! The library models an edge-computing platform that assigns per-area
//! workload to capacitated edge nodes under delay, eligibility, service-level
//! and fairness constraints, and asks which `K` nodes an intelligent
//! adversary would destroy to hurt it most. Protecting exactly that critical
//! set is the proposed hardening plan.
//!
//! Pipeline: [`topology`] synthesizes instances, [`model`] builds the
//! defender's allocation LP (attacked or not), [`lp`] solves LPs with dual
//! certificates, [`reform`] turns the max-min program into two single-level
//! MILPs (duality-based and KKT-based), [`solve`] provides branch-and-bound,
//! an exact enumeration oracle and verification, and [`experiments`]
//! reproduces the hardening-scheme comparison and failure simulations.

pub mod experiments;
pub mod fixtures;
pub mod lp;
pub mod model;
pub mod reform;
pub mod solve;
pub mod topology;
