//! Computational tools for finitely L-presented groups.
//!
//! A finite L-presentation `⟨X | Q | Φ | R⟩` describes the group
//! `⟨X | Q ∪ ⋃_{σ∈Φ*} σ(R)⟩`, where `Φ*` is the free monoid generated by the
//! endomorphisms `Φ` of the free group on `X`.  Groups such as the Grigorchuk
//! group and the Fabrykowski–Gupta groups admit such presentations with small
//! finite data even though they are not finitely presentable.
//!
//! The crate provides:
//!
//! * free-group words and endomorphisms ([`word`]);
//! * L-presentations, built-in example groups, and finite truncations ([`lpres`]);
//! * exact integer linear algebra: Hermite and Smith normal forms, kernels,
//!   lattice intersections and spinning closures ([`zlat`]);
//! * weighted polycyclic presentations with collection and consistency
//!   checking ([`pcp`]);
//! * nilpotent quotients of L-presented groups ([`nq`]) and the induced
//!   quotients of the Schur multiplier ([`dwyer`]);
//! * Todd–Coxeter coset enumeration ([`tc`]), certified index computation for
//!   L-presented groups ([`lcenum`]), low-index subgroup enumeration
//!   ([`lowx`]), and Reidemeister–Schreier rewriting with subgroup
//!   L-presentations and derived series sections ([`rs`]);
//! * a small text format for presentations ([`lpfile`]).
//!
//! All arithmetic that reaches a user-visible result is exact; internal
//! fixed-width fast paths detect overflow and fail loudly rather than wrap.

pub mod dwyer;
pub mod lcenum;
pub mod lowx;
pub mod lpfile;
pub mod lpres;
pub mod nq;
pub mod pcp;
pub mod rs;
pub mod tc;
pub mod word;
pub mod zlat;

mod ilat;
