use proptest::prelude::*;

use super::*;
use crate::spec::{GuaranteeDuration, TierChoice};

const D2E: LinkId = LinkId {
    from: TierId::Device,
    to: TierId::Edge,
};

fn compute(min: u64, max: u64) -> ComputeReq {
    ComputeReq {
        min_cpu: Millicpu(min),
        max_cpu: Millicpu(max),
        min_memory: Bytes(1),
        max_memory: Bytes(1),
        tier: TierChoice::Auto,
    }
}

fn network(gbr: f64, mbr: f64, latency: f64, per: f64) -> NetworkReq {
    NetworkReq {
        latency,
        throughput_gbr: gbr,
        throughput_mbr: mbr,
        packet_error_rate: per,
        duration: GuaranteeDuration::Auto,
    }
}

fn single_tier(total: u64) -> Fabric {
    Fabric::new(&FabricConfig {
        tiers: vec![TierConfig {
            tier_id: TierId::Edge,
            total_millicpu: Millicpu(total),
            total_memory: Bytes::gib(64),
            cost_per_millicpu_second: 1.0,
        }],
        links: vec![],
        load_schedule: LoadSchedule::default(),
    })
    .unwrap()
}

fn testbed() -> Fabric {
    Fabric::new(&FabricConfig::testbed()).unwrap()
}

fn traffic(link: LinkId, mbps: f64) -> LoadSchedule {
    LoadSchedule::new(vec![LoadEvent {
        time: 0.0,
        target: LoadTarget::Link(link),
        kind: LoadKind::TrafficMbps,
        value: mbps,
    }])
}

#[test]
fn compute_grant_on_a_worker() {
    let mut fabric = single_tier(24_000);
    let slice = fabric
        .grant_compute("faceDetection", &compute(2000, 2000), TierId::Edge)
        .unwrap();
    assert_eq!(slice.granted_millicpu, Millicpu(2000));
    assert_eq!(fabric.tier(TierId::Edge).unwrap().free_millicpu(), 22_000);
}

#[test]
fn compute_grant_takes_up_to_max() {
    let mut fabric = single_tier(3000);
    let slice = fabric
        .grant_compute("f", &compute(1000, 5000), TierId::Edge)
        .unwrap();
    assert_eq!(slice.granted_millicpu, Millicpu(3000));
}

#[test]
fn empty_tier_rejects() {
    let mut fabric = single_tier(1000);
    fabric
        .grant_compute("a", &compute(1000, 1000), TierId::Edge)
        .unwrap();
    let err = fabric
        .grant_compute("b", &compute(1, 1), TierId::Edge)
        .unwrap_err();
    assert!(matches!(err, FabricError::InsufficientCompute { .. }));
    assert_eq!(err.dimension(), Some(Dimension::Compute));
}

#[test]
fn third_half_core_grant_fails() {
    let mut fabric = single_tier(1000);
    fabric
        .grant_compute("a", &compute(500, 500), TierId::Edge)
        .unwrap();
    fabric
        .grant_compute("b", &compute(500, 500), TierId::Edge)
        .unwrap();
    assert!(fabric
        .grant_compute("c", &compute(500, 500), TierId::Edge)
        .is_err());
}

#[test]
fn network_admission() {
    let mut fabric = testbed();
    let slice = fabric
        .grant_network("fd", &network(5.0, 5.0, 50.0, 1e-2), D2E)
        .unwrap();
    assert_eq!(slice.gbr, Kbps(5000));
    assert_eq!(fabric.link(D2E).unwrap().headroom(), Kbps(0));

    let mut fabric = testbed();
    fabric
        .grant_network("a", &network(2.5, 2.5, 50.0, 1e-2), D2E)
        .unwrap();
    assert_eq!(fabric.link(D2E).unwrap().headroom(), Kbps(2500));
}

#[test]
fn network_rejections_name_the_dimension() {
    let mut fabric = testbed();
    fabric
        .grant_network("a", &network(4.7, 4.7, 50.0, 1e-2), D2E)
        .unwrap();
    let err = fabric
        .grant_network("b", &network(0.5, 0.5, 50.0, 1e-2), D2E)
        .unwrap_err();
    assert_eq!(err.dimension(), Some(Dimension::Bandwidth));

    let e2c = LinkId::new(TierId::Edge, TierId::Cloud);
    let err = fabric
        .grant_network("c", &network(1.0, 1.0, 1.0, 1e-2), e2c)
        .unwrap_err();
    assert_eq!(err.dimension(), Some(Dimension::Latency));

    let err = fabric
        .grant_network("c", &network(1.0, 1.0, 50.0, 1e-5), D2E)
        .unwrap_err();
    assert_eq!(err.dimension(), Some(Dimension::PacketErrorRate));

    let err = fabric
        .grant_network(
            "c",
            &network(1.0, 1.0, 50.0, 1e-2),
            LinkId::new(TierId::Cloud, TierId::Device),
        )
        .unwrap_err();
    assert_eq!(err.dimension(), Some(Dimension::Route));
}

#[test]
fn release_restores_and_is_not_idempotent() {
    let mut fabric = testbed();
    let before = fabric.link(D2E).unwrap().headroom();
    let slice = fabric
        .grant_network("a", &network(1.234, 2.0, 50.0, 1e-2), D2E)
        .unwrap();
    fabric.release(slice.id).unwrap();
    assert_eq!(fabric.link(D2E).unwrap().headroom(), before);
    assert_eq!(
        fabric.release(slice.id),
        Err(FabricError::UnknownSlice(slice.id))
    );
}

#[test]
fn resize_is_all_or_nothing() {
    let mut fabric = testbed();
    let a = fabric
        .grant_network("a", &network(0.5, 5.0, 50.0, 1e-2), D2E)
        .unwrap();
    fabric
        .grant_network("b", &network(1.0, 1.0, 50.0, 1e-2), D2E)
        .unwrap();
    assert!(fabric.resize_network(a.id, Kbps(5000)).is_err());
    assert_eq!(fabric.network_slice(a.id).unwrap().gbr, Kbps(500));
    fabric.resize_network(a.id, Kbps(4000)).unwrap();
    assert_eq!(fabric.link(D2E).unwrap().headroom(), Kbps(0));
}

#[test]
fn best_effort_flow_gets_residual_after_pumped_traffic() {
    let mut fabric = testbed();
    fabric.apply_load(&traffic(D2E, 4.75), 0.0).unwrap();
    let out = fabric
        .effective_network(
            D2E,
            &[Flow {
                slice: None,
                demand_mbps: 5.0,
            }],
        )
        .unwrap();
    assert_eq!(out, vec![0.25]);

    fabric.apply_load(&traffic(D2E, 4.5), 0.0).unwrap();
    let out = fabric
        .effective_network(
            D2E,
            &[Flow {
                slice: None,
                demand_mbps: 5.0,
            }],
        )
        .unwrap();
    assert_eq!(out, vec![0.5]);
}

#[test]
fn sliced_flow_is_protected_from_pumped_traffic() {
    let mut fabric = testbed();
    let slice = fabric
        .grant_network("fd", &network(5.0, 5.0, 50.0, 1e-2), D2E)
        .unwrap();
    fabric.apply_load(&traffic(D2E, 4.75), 0.0).unwrap();
    let out = fabric
        .effective_network(
            D2E,
            &[Flow {
                slice: Some(slice.id),
                demand_mbps: 5.0,
            }],
        )
        .unwrap();
    assert_eq!(out, vec![5.0]);
}

#[test]
fn demand_limited_slice() {
    let mut fabric = testbed();
    let slice = fabric
        .grant_network("fd", &network(5.0, 5.0, 50.0, 1e-2), D2E)
        .unwrap();
    let out = fabric
        .effective_network(
            D2E,
            &[Flow {
                slice: Some(slice.id),
                demand_mbps: 3.0,
            }],
        )
        .unwrap();
    assert_eq!(out, vec![3.0]);
}

#[test]
fn mbr_is_policed() {
    let mut fabric = testbed();
    let slice = fabric
        .grant_network("fd", &network(1.0, 2.0, 50.0, 1e-2), D2E)
        .unwrap();
    let out = fabric
        .effective_network(
            D2E,
            &[Flow {
                slice: Some(slice.id),
                demand_mbps: 4.0,
            }],
        )
        .unwrap();
    assert_eq!(out, vec![2.0]);
}

#[test]
fn cpu_burn_leaves_half_a_core() {
    let mut fabric = testbed();
    let schedule = LoadSchedule::new(vec![LoadEvent {
        time: 0.0,
        target: LoadTarget::Tier(TierId::Edge),
        kind: LoadKind::CpuBurnMillicpu,
        value: 71_500.0,
    }]);
    fabric.apply_load(&schedule, 0.0).unwrap();
    assert_eq!(
        fabric.effective_compute(TierId::Edge, &[None]).unwrap(),
        vec![500.0]
    );
}

#[test]
fn burn_cannot_touch_a_compute_slice() {
    let mut fabric = testbed();
    let slice = fabric
        .grant_compute("fd", &compute(2000, 2000), TierId::Edge)
        .unwrap();
    let schedule = LoadSchedule::new(vec![LoadEvent {
        time: 0.0,
        target: LoadTarget::Tier(TierId::Edge),
        kind: LoadKind::CpuBurnMillicpu,
        value: 100_000.0,
    }]);
    fabric.apply_load(&schedule, 0.0).unwrap();
    let out = fabric
        .effective_compute(TierId::Edge, &[Some(slice.id), None])
        .unwrap();
    assert_eq!(out, vec![2000.0, 0.0]);
}

#[test]
fn load_steps_at_event_times() {
    let mut fabric = testbed();
    let schedule = LoadSchedule::new(vec![
        LoadEvent {
            time: 0.0,
            target: LoadTarget::Link(D2E),
            kind: LoadKind::TrafficMbps,
            value: 1.0,
        },
        LoadEvent {
            time: 10.0,
            target: LoadTarget::Link(D2E),
            kind: LoadKind::TrafficMbps,
            value: 4.0,
        },
    ]);
    fabric.apply_load(&schedule, 9.99).unwrap();
    assert_eq!(fabric.link(D2E).unwrap().external_traffic, Kbps(1000));
    fabric.apply_load(&schedule, 10.0).unwrap();
    assert_eq!(fabric.link(D2E).unwrap().external_traffic, Kbps(4000));
}

#[test]
fn empty_schedule_keeps_fabric_constant() {
    let mut fabric = testbed();
    let before: Vec<LinkState> = fabric.links().cloned().collect();
    for t in 0..10 {
        fabric
            .apply_load(&LoadSchedule::default(), t as f64)
            .unwrap();
    }
    let after: Vec<LinkState> = fabric.links().cloned().collect();
    assert_eq!(before, after);
    assert!(fabric.log().is_empty());
}

#[test]
fn unknown_load_target() {
    let mut fabric = single_tier(1000);
    let err = fabric.apply_load(&traffic(D2E, 1.0), 0.0).unwrap_err();
    assert_eq!(err, FabricError::UnknownTarget(LoadTarget::Link(D2E)));
}

#[test]
fn ledger_log_exports_as_json_lines() {
    let mut fabric = testbed();
    let s = fabric
        .grant_compute("fd", &compute(2000, 2000), TierId::Edge)
        .unwrap();
    fabric.release(s.id).unwrap();
    let text = fabric.log_jsonl();
    let lines: Vec<LedgerEvent> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines, fabric.log());
    assert!(text.starts_with("{\"event\":\"grantCompute\""));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = FabricConfig::testbed();
    cfg.links[0].to = TierId::Device;
    assert!(Fabric::new(&cfg).is_err());

    let mut cfg = FabricConfig::testbed();
    cfg.tiers.pop();
    assert!(Fabric::new(&cfg).is_err());

    let mut cfg = FabricConfig::testbed();
    cfg.tiers[0].total_millicpu = Millicpu(0);
    assert!(Fabric::new(&cfg).is_err());
}

proptest! {
    #[test]
    fn pumped_traffic_never_helps_best_effort(
        demands in prop::collection::vec(0.0f64..6.0, 1..5),
        gbr in 0.0f64..5.0,
        ext_lo in 0.0f64..10.0,
        ext_extra in 0.0f64..10.0,
    ) {
        let mut fabric = testbed();
        let slice = fabric.grant_network("s", &network(gbr.max(0.001), 5.0, 50.0, 1e-2), D2E).unwrap();
        let mut flows = vec![Flow { slice: Some(slice.id), demand_mbps: 3.0 }];
        flows.extend(demands.iter().map(|&d| Flow { slice: None, demand_mbps: d }));

        fabric.apply_load(&traffic(D2E, ext_lo), 0.0).unwrap();
        let low = fabric.effective_network(D2E, &flows).unwrap();
        fabric.apply_load(&traffic(D2E, ext_lo + ext_extra), 0.0).unwrap();
        let high = fabric.effective_network(D2E, &flows).unwrap();
        for i in 1..flows.len() {
            prop_assert!(high[i] <= low[i] + 1e-12);
        }
    }

    #[test]
    fn delivered_rates_respect_capacity_and_mbr(
        specs in prop::collection::vec((1u32..2000, 0u32..2000, 0.0f64..4.0), 1..4),
        be in prop::collection::vec(0.0f64..5.0, 0..3),
        ext in 0.0f64..8.0,
    ) {
        let mut fabric = testbed();
        let mut flows = Vec::new();
        let mut mbrs = Vec::new();
        for (gbr, extra, demand) in specs {
            let req = network(gbr as f64 / 1000.0, (gbr + extra) as f64 / 1000.0, 50.0, 1e-2);
            if let Ok(slice) = fabric.grant_network("s", &req, D2E) {
                flows.push(Flow { slice: Some(slice.id), demand_mbps: demand });
                mbrs.push(slice.mbr.mbps());
            }
        }
        let sliced = flows.len();
        flows.extend(be.iter().map(|&d| Flow { slice: None, demand_mbps: d }));
        fabric.apply_load(&traffic(D2E, ext), 0.0).unwrap();
        let out = fabric.effective_network(D2E, &flows).unwrap();
        let total: f64 = out.iter().sum();
        prop_assert!(total <= 5.0 + 1e-9);
        for i in 0..sliced {
            prop_assert!(out[i] <= mbrs[i] + 1e-12);
        }
        for (o, f) in out.iter().zip(&flows) {
            prop_assert!(*o <= f.demand_mbps + 1e-12);
        }
    }
}
