// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::path::PathBuf;

use autoft::emit::{EmitOptions, Testbench};
use autoft::parser::parse_module_file;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Fixture file with its per-transaction property counts, counted by hand
/// from the attribute rows:
///
/// | attribute      | properties                                         |
/// |----------------|----------------------------------------------------|
/// | val            | liveness, response_had_request, counter_no_underflow |
/// | ack            | ack_eventually (cover when stable is absent)       |
/// | stable         | stability (needs ack)                              |
/// | active         | active_covered                                     |
/// | transid        | transid_integrity                                  |
/// | transid_unique | uniqueness                                         |
/// | data           | data_integrity (needs transid)                     |
/// | any            | xprop_p, xprop_q                                   |
pub const FIXTURES: &[(&str, &[(&str, usize)])] = &[
    // val 3, ack cover 1, xprop 2
    ("fifo.sv", &[("fifo", 6)]),
    ("fifo_deadlock.sv", &[("fifo", 6)]),
    // pipe: val 3, ack 1, stable 1, transid 1, unique 1, data 1, xprop 2
    // mem: val 3, ack cover 1, active 1, transid 1, xprop 2
    ("pipeline.sv", &[("pipe", 10), ("mem", 8)]),
    // val 3, ack cover 1, transid 1, data 1, xprop 2
    ("noc_buffer.sv", &[("mem_engine_noc", 8)]),
    // lsu_mmu: val 3, ack cover 1, xprop 2 (data without transid adds nothing)
    // icache_mmu: val 3, xprop 2
    ("mmu.sv", &[("lsu_mmu", 6), ("icache_mmu", 5)]),
    // dtlb_ptw: val 3, ack 1, stable 1, xprop 2
    // ptw_dcache: val 3, ack cover 1, xprop 2
    ("ptw.sv", &[("dtlb_ptw", 7), ("ptw_dcache", 6)]),
    // val 3, xprop 2
    ("tlb.sv", &[("tlb", 5)]),
    // val 3, active 1, transid 1, data 1, xprop 2
    ("lsu.sv", &[("lsu_load", 8)]),
];

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(name)).expect("fixture readable")
}

pub fn testbench(name: &str, opts: &EmitOptions) -> Testbench {
    let src = read_fixture(name);
    let pm = parse_module_file(&src, name).expect("fixture parses");
    Testbench::build(&pm, opts).expect("fixture validates")
}
