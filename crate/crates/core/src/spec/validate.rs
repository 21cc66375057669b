use std::collections::BTreeSet;

use super::{
    pointer_token, AppLevelSpec, AppSliceSpec, AppSpec, ComputeReq, Diagnostic, GuaranteeDuration,
    NetworkReq,
};

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn ratio(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

/// Intrinsic invariants of the application graph.
pub fn validate_app(app: &AppSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if app.app_name.trim().is_empty() {
        out.push(Diagnostic::error(
            "/app/appName",
            "application name is empty",
        ));
    }

    let mut function_names = BTreeSet::new();
    let mut instance_names = BTreeSet::new();
    for (i, f) in app.functions.iter().enumerate() {
        let base = format!("/app/functions/{i}");
        if f.name.trim().is_empty() {
            out.push(Diagnostic::error(
                format!("{base}/name"),
                "function name is empty",
            ));
        } else if !function_names.insert(f.name.as_str()) {
            out.push(Diagnostic::error(
                format!("{base}/name"),
                format!("duplicate function name {:?}", f.name),
            ));
        }
        if f.instances.is_empty() {
            out.push(Diagnostic::error(
                format!("{base}/instances"),
                "a function needs at least one instance",
            ));
        }
        for (j, inst) in f.instances.iter().enumerate() {
            if inst.trim().is_empty() {
                out.push(Diagnostic::error(
                    format!("{base}/instances/{j}"),
                    "instance name is empty",
                ));
            } else if !instance_names.insert(inst.as_str()) {
                out.push(Diagnostic::error(
                    format!("{base}/instances/{j}"),
                    format!("duplicate instance name {inst:?}"),
                ));
            }
        }
    }

    let mut seen_edges = BTreeSet::new();
    let mut graph_ok = !out
        .iter()
        .any(|d| d.message.starts_with("duplicate instance"));
    for (i, e) in app.edges.iter().enumerate() {
        let base = format!("/app/edges/{i}");
        for (field, inst) in [
            ("fromInstance", &e.from_instance),
            ("toInstance", &e.to_instance),
        ] {
            if !instance_names.contains(inst.as_str()) {
                graph_ok = false;
                out.push(Diagnostic::error(
                    format!("{base}/{field}"),
                    format!("unknown instance {inst:?}"),
                ));
            }
        }
        if e.from_instance == e.to_instance {
            graph_ok = false;
            out.push(Diagnostic::error(
                base.clone(),
                "edge connects an instance to itself",
            ));
        }
        if !seen_edges.insert((&e.from_instance, &e.to_instance)) {
            out.push(Diagnostic::error(base, "duplicate edge"));
        }
    }

    if graph_ok && !instance_graph_is_acyclic(app) {
        out.push(Diagnostic::error(
            "/app/edges",
            "instance graph contains a cycle",
        ));
    } else if graph_ok && app.topological_order().is_none() {
        out.push(Diagnostic::error(
            "/app/edges",
            "function graph contains a cycle through instances of the same functions",
        ));
    }
    out
}

fn instance_graph_is_acyclic(app: &AppSpec) -> bool {
    let nodes: Vec<&str> = app
        .functions
        .iter()
        .flat_map(|f| f.instances.iter().map(String::as_str))
        .collect();
    let mut indegree: Vec<usize> = nodes
        .iter()
        .map(|n| app.edges.iter().filter(|e| e.to_instance == *n).count())
        .collect();
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = ready.pop() {
        visited += 1;
        for e in app.edges.iter().filter(|e| e.from_instance == nodes[i]) {
            if let Some(j) = nodes.iter().position(|n| *n == e.to_instance) {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    visited == nodes.len()
}

fn validate_application(app: &AppLevelSpec, out: &mut Vec<Diagnostic>) {
    let base = "/appSlice/application";
    if !positive(app.latency) {
        out.push(Diagnostic::error(
            format!("{base}/latency"),
            "latency must be > 0 ms",
        ));
    }
    if !positive(app.bandwidth) {
        out.push(Diagnostic::error(
            format!("{base}/bandwidth"),
            "bandwidth must be > 0 Mbps",
        ));
    }
    if app.device_count < 1 {
        out.push(Diagnostic::error(
            format!("{base}/deviceCount"),
            "deviceCount must be >= 1",
        ));
    }
    if !ratio(app.reliability) {
        out.push(Diagnostic::error(
            format!("{base}/reliability"),
            "reliability must lie in [0, 1]",
        ));
    }
}

fn validate_network(net: &NetworkReq, base: &str, out: &mut Vec<Diagnostic>) {
    if !positive(net.latency) {
        out.push(Diagnostic::error(
            format!("{base}/latency"),
            "latency must be > 0 ms",
        ));
    }
    if !positive(net.throughput_gbr) {
        out.push(Diagnostic::error(
            format!("{base}/throughputGBR"),
            "throughputGBR must be > 0 Mbps",
        ));
    }
    if !net.throughput_mbr.is_finite() || net.throughput_mbr < net.throughput_gbr {
        out.push(Diagnostic::error(
            format!("{base}/throughputMBR"),
            format!(
                "throughputMBR ({}) must be >= throughputGBR ({})",
                net.throughput_mbr, net.throughput_gbr
            ),
        ));
    }
    if !ratio(net.packet_error_rate) {
        out.push(Diagnostic::error(
            format!("{base}/packetErrorRate"),
            "packetErrorRate must lie in [0, 1]",
        ));
    }
    if let GuaranteeDuration::Millis(ms) = net.duration {
        if !positive(ms) {
            out.push(Diagnostic::error(
                format!("{base}/duration"),
                "duration must be \"auto\" or > 0 ms",
            ));
        }
    }
}

fn validate_compute(c: &ComputeReq, base: &str, out: &mut Vec<Diagnostic>) {
    if c.min_cpu.0 < 1 {
        out.push(Diagnostic::error(
            format!("{base}/minCPUCores"),
            "minCPUCores must be >= 1m",
        ));
    }
    if c.max_cpu < c.min_cpu {
        out.push(Diagnostic::error(
            format!("{base}/maxCPUCores"),
            format!(
                "maxCPUCores ({}) must be >= minCPUCores ({})",
                c.max_cpu, c.min_cpu
            ),
        ));
    }
    if c.min_memory.0 < 1 {
        out.push(Diagnostic::error(
            format!("{base}/minMemory"),
            "minMemory must be >= 1 byte",
        ));
    }
    if c.max_memory < c.min_memory {
        out.push(Diagnostic::error(
            format!("{base}/maxMemory"),
            format!(
                "maxMemory ({}) must be >= minMemory ({})",
                c.max_memory.0, c.min_memory.0
            ),
        ));
    }
}

/// Intrinsic invariants of the slice specification.
pub fn validate_slice(slice: &AppSliceSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    validate_application(&slice.application, &mut out);
    for (name, fs) in &slice.per_function {
        let base = format!("/appSlice/perFunction/{}", pointer_token(name));
        validate_network(&fs.network, &format!("{base}/network"), &mut out);
        validate_compute(&fs.compute, &format!("{base}/compute"), &mut out);
    }
    out
}

/// Cross-check a slice spec against its application. Errors for unknown or
/// missing function entries; a warning when the per-function guaranteed
/// bandwidth adds up to more than the application-level bandwidth.
pub fn validate_against_app(slice: &AppSliceSpec, app: &AppSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for name in slice.per_function.keys() {
        if app.function(name).is_none() {
            out.push(Diagnostic::error(
                format!("/appSlice/perFunction/{}", pointer_token(name)),
                format!("slice names unknown function {name:?}"),
            ));
        }
    }
    for (i, f) in app.functions.iter().enumerate() {
        if !slice.per_function.contains_key(&f.name) {
            out.push(Diagnostic::error(
                format!("/app/functions/{i}"),
                format!("function {:?} has no entry in appSlice.perFunction", f.name),
            ));
        }
    }
    let total_gbr: f64 = slice
        .per_function
        .values()
        .map(|fs| fs.network.throughput_gbr)
        .sum();
    if total_gbr > slice.application.bandwidth + 1e-9 {
        out.push(Diagnostic::warning(
            "/appSlice/application/bandwidth",
            format!(
                "per-function throughputGBR sums to {total_gbr} Mbps, above the application bandwidth of {} Mbps",
                slice.application.bandwidth
            ),
        ));
    }
    out
}
