//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, resume_unwind};
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;

use fogsim::cache::{mark_cache_worthy, place_caches, tally_popularity, CachePlan, MarkOptions};
use fogsim::demand::{DemandConfig, DeploymentStyle, Request, ScenarioSpec, SizeMode, SizeSource};
use fogsim::geo::GeoPoint;
use fogsim::metrics::{
    evaluate_operator, price_of_fog, run_sweep, EvalOptions, SweepAxis, SweepOptions, SweepRow,
};
use fogsim::scenario::{build_synthetic, Scenario};
use fogsim::seed::derive_seed;
use fogsim::topology::{build_tree, CellEstimate, GroupingRule, Level, NodeId, Topology};
use fogsim::trace::ContentCategory;

fn criterion<F: FnOnce() + std::panic::UnwindSafe>(number: u32, name: &str, body: F) {
    let outcome = catch_unwind(body);
    match &outcome {
        Ok(()) => println!("[acceptance] criterion {number} ({name}): PASS"),
        Err(_) => println!("[acceptance] criterion {number} ({name}): FAIL"),
    }
    if let Err(panic) = outcome {
        resume_unwind(panic);
    }
}

fn line_cells(n: usize) -> Vec<CellEstimate> {
    (0..n)
        .map(|i| {
            let p = GeoPoint::new(0.0, i as f64 * 0.01);
            CellEstimate {
                cell_id: format!("cell{i:03}"),
                operator: "op".into(),
                hull: vec![p],
                barycenter: p,
                area_km2: 0.0,
                observation_count: 1,
            }
        })
        .collect()
}

fn request(cell: &str, item: &str) -> Request {
    Request {
        user_id: "u".into(),
        day: "2015-10-05".parse().unwrap(),
        hour: 8,
        cell_id: cell.into(),
        operator: "op".into(),
        category: ContentCategory::YouTube,
        item: item.into(),
        bytes: 100,
    }
}

/// The pinned 200-cell scenario used by the statistical criteria.
fn sweep_scenario(master_seed: u64) -> Scenario {
    let spec = ScenarioSpec {
        n_users: 30,
        hours: 24,
        requests_per_user_hour: 2,
        ..ScenarioSpec::new("synth", DeploymentStyle::SmallCells, 200)
    };
    let demand = DemandConfig {
        size_source: SizeSource::CategoryLognormal,
        ..DemandConfig::default()
    };
    build_synthetic(
        &[spec],
        &demand,
        10,
        GroupingRule::SpaceFillingCurve,
        master_seed,
    )
    .unwrap()
}

fn sweep_seeds(master_seed: u64, count: u32) -> Vec<u64> {
    (0..count)
        .map(|i| derive_seed(master_seed, &format!("sweep-seed:{i}")))
        .collect()
}

fn unit_sweep_options() -> SweepOptions {
    SweepOptions {
        eval: EvalOptions {
            target_hit_ratio: 0.5,
            mark: MarkOptions::default(),
            size_mode: SizeMode::Unit,
            architectures: Level::ALL.to_vec(),
        },
        ..SweepOptions::default()
    }
}

fn rows_for(rows: &[SweepRow], arch: Level) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.architecture == arch).collect()
}

// Criterion 1: 3882 cells with fanout 10 produce level counts 3882/389/39/4.
#[test]
fn criterion_1_topology_arithmetic() {
    criterion(1, "topology arithmetic", || {
        let topology =
            build_tree(&line_cells(3882), 10, 0, GroupingRule::SpaceFillingCurve).unwrap();
        assert_eq!(topology.level_count(Level::BaseStation), 3882);
        assert_eq!(topology.level_count(Level::Ring), 389);
        assert_eq!(topology.level_count(Level::Pod), 39);
        assert_eq!(topology.level_count(Level::Core), 4);
    });
}

/// Three items spread over six base stations in rings of two so that the
/// two rings under the first pod union to all three items while the lone
/// ring under the second pod holds two: totals 6/6/5/3 by hand.
fn worked_example() -> (Topology, Vec<Request>) {
    let topology = build_tree(&line_cells(6), 2, 0, GroupingRule::SpaceFillingCurve).unwrap();
    let pods: Vec<&fogsim::topology::TopologyNode> = topology
        .nodes
        .iter()
        .filter(|n| n.level == Level::Pod)
        .collect();
    assert_eq!(pods.len(), 2);
    let rings_of = |pod: &fogsim::topology::TopologyNode| pod.children.clone();
    let cell_of = |ring: NodeId, slot: usize| {
        let bs = topology.node(ring).unwrap().children[slot];
        topology.node(bs).unwrap().cell_id.clone().unwrap()
    };

    let first_pod_rings = rings_of(pods[0]);
    let second_pod_rings = rings_of(pods[1]);
    assert_eq!(first_pod_rings.len(), 2);
    assert_eq!(second_pod_rings.len(), 1);

    let assignment = [
        (cell_of(first_pod_rings[0], 0), "A"),
        (cell_of(first_pod_rings[0], 1), "B"),
        (cell_of(first_pod_rings[1], 0), "A"),
        (cell_of(first_pod_rings[1], 1), "C"),
        (cell_of(second_pod_rings[0], 0), "B"),
        (cell_of(second_pod_rings[0], 1), "C"),
    ];
    let requests = assignment
        .iter()
        .map(|(cell, item)| request(cell, item))
        .collect();
    (topology, requests)
}

// Criterion 2: the worked instance yields totals 6/6/5/3 in unit-size mode
// and price-of-fog 5/3 at pods, 2 at base stations.
#[test]
fn criterion_2_worked_example() {
    criterion(2, "worked example", || {
        let (topology, requests) = worked_example();
        let worthy =
            mark_cache_worthy(&tally_popularity(&requests), 1.0, MarkOptions::default()).unwrap();
        let unit = HashMap::new();
        let plans: BTreeMap<Level, CachePlan> = Level::ALL
            .iter()
            .map(|&arch| (arch, place_caches(&worthy, &topology, arch, &unit).unwrap()))
            .collect();

        assert_eq!(plans[&Level::BaseStation].total_size, 6);
        assert_eq!(plans[&Level::Ring].total_size, 6);
        assert_eq!(plans[&Level::Pod].total_size, 5);
        assert_eq!(plans[&Level::Core].total_size, 3);

        let pod_pof = price_of_fog(&plans[&Level::Pod], &plans[&Level::Core])
            .unwrap()
            .value
            .unwrap();
        let bs_pof = price_of_fog(&plans[&Level::BaseStation], &plans[&Level::Core])
            .unwrap()
            .value
            .unwrap();
        assert!(
            (pod_pof - 5.0 / 3.0).abs() < 1e-9,
            "pod price-of-fog {pod_pof}"
        );
        assert_eq!(bs_pof, 2.0);
    });
}

// Criterion 3: identical worthy sets at N base stations give price-of-fog
// exactly N; pairwise-disjoint sets give exactly 1 at every level.
#[test]
fn criterion_3_price_of_fog_extremes() {
    criterion(3, "price-of-fog extremes", || {
        proptest!(ProptestConfig::with_cases(60), |(n in 1usize..=50, k in 1usize..=4)| {
            let cells = line_cells(n);
            let topology = build_tree(&cells, 10, 0, GroupingRule::SpaceFillingCurve).unwrap();
            let unit = HashMap::new();

            // Identical item sets at every base station.
            let mut identical = Vec::new();
            for cell in &cells {
                for item in 0..k {
                    identical.push(request(&cell.cell_id, &format!("shared{item}")));
                }
            }
            let worthy =
                mark_cache_worthy(&tally_popularity(&identical), 1.0, MarkOptions::default())
                    .unwrap();
            let bs = place_caches(&worthy, &topology, Level::BaseStation, &unit).unwrap();
            let core = place_caches(&worthy, &topology, Level::Core, &unit).unwrap();
            let pof = price_of_fog(&bs, &core).unwrap().value.unwrap();
            prop_assert_eq!(pof, n as f64);

            // Pairwise-disjoint sets.
            let mut disjoint = Vec::new();
            for (i, cell) in cells.iter().enumerate() {
                for item in 0..k {
                    disjoint.push(request(&cell.cell_id, &format!("own{i}x{item}")));
                }
            }
            let worthy =
                mark_cache_worthy(&tally_popularity(&disjoint), 1.0, MarkOptions::default())
                    .unwrap();
            let core = place_caches(&worthy, &topology, Level::Core, &unit).unwrap();
            for arch in Level::ALL {
                let plan = place_caches(&worthy, &topology, arch, &unit).unwrap();
                let pof = price_of_fog(&plan, &core).unwrap().value.unwrap();
                prop_assert_eq!(pof, 1.0, "architecture {}", arch);
            }
        });
    });
}

/// Small randomized scenario for the structural criteria.
fn random_scenario(index: u64) -> (Vec<Request>, Topology) {
    let styles = [
        DeploymentStyle::MicroCells,
        DeploymentStyle::SmallCells,
        DeploymentStyle::LargeCells,
        DeploymentStyle::UmbrellaCells,
    ];
    let spec = ScenarioSpec {
        n_users: 5 + (index % 17) as u32,
        hours: 4 + (index % 7) as u32,
        requests_per_user_hour: 1 + (index % 3) as u32,
        ..ScenarioSpec::new("op", styles[(index % 4) as usize], 8 + (index % 53) as u32)
    };
    let demand = DemandConfig {
        size_source: SizeSource::CategoryLognormal,
        video_catalog_size: 50_000,
        ..DemandConfig::default()
    };
    let scenario = build_synthetic(
        &[spec],
        &demand,
        10,
        GroupingRule::SpaceFillingCurve,
        derive_seed(9000, &format!("scenario:{index}")),
    )
    .unwrap();
    let topology = scenario.topologies["op"].clone();
    (scenario.requests, topology)
}

// Criterion 4: total size is monotone over levels (BS >= Ring >= Pod >= Core)
// on over 100 randomized scenarios, zero violations, in both item counts and
// byte totals.
#[test]
fn criterion_4_level_monotonicity() {
    criterion(4, "level monotonicity", || {
        for index in 0..120u64 {
            let (requests, topology) = random_scenario(index);
            let target = 0.1 + 0.08 * (index % 11) as f64;
            let worthy =
                mark_cache_worthy(&tally_popularity(&requests), target, MarkOptions::default())
                    .unwrap();
            let sizes = fogsim::demand::size_map(&requests, SizeMode::MeanRequestBytes);
            let plans: Vec<CachePlan> = Level::ALL
                .iter()
                .map(|&arch| place_caches(&worthy, &topology, arch, &sizes).unwrap())
                .collect();
            for pair in plans.windows(2) {
                assert!(
                    pair[0].total_items >= pair[1].total_items,
                    "scenario {index}: item totals regressed between {} and {}",
                    pair[0].architecture,
                    pair[1].architecture
                );
                assert!(
                    pair[0].total_size >= pair[1].total_size,
                    "scenario {index}: byte totals regressed between {} and {}",
                    pair[0].architecture,
                    pair[1].architecture
                );
            }
        }
    });
}

// Criterion 5: the marking is sufficient (achieved >= target) and minimal
// (dropping the last-marked pair falls below target) for targets 0.1..0.9
// over randomized scenarios. Zero violations.
#[test]
fn criterion_5_attainment_and_minimality() {
    criterion(5, "hit-ratio attainment and minimality", || {
        for index in 0..12u64 {
            let (requests, _topology) = random_scenario(index * 7 + 3);
            let pairs = tally_popularity(&requests);
            let total: u64 = pairs.iter().map(|p| p.request_count).sum();
            assert!(total > 0);
            for step in 1..=9u32 {
                let target = f64::from(step) / 10.0;
                let worthy = mark_cache_worthy(&pairs, target, MarkOptions::default()).unwrap();
                assert!(
                    worthy.achieved_hit_ratio + 1e-12 >= target,
                    "scenario {index}: achieved {} < target {target}",
                    worthy.achieved_hit_ratio
                );
                assert!(!worthy.infeasible);

                let marked_weight: u64 = worthy.pairs.iter().map(|p| p.request_count).sum();
                let last = worthy
                    .pairs
                    .last()
                    .expect("positive target marks at least one pair");
                let without_last = (marked_weight - last.request_count) as f64 / total as f64;
                assert!(
                    without_last < target,
                    "scenario {index}: dropping the last pair still meets target {target}"
                );
            }
        }
    });
}

// Criterion 6: on the pinned 200-cell scenario, total cache size at every
// architecture is non-increasing over the p grid within 2% tolerance,
// averaged over 10 seeds.
#[test]
fn criterion_6_recommendation_trend() {
    criterion(6, "recommendation trend", || {
        let scenario = sweep_scenario(1000);
        let result = run_sweep(
            &scenario.requests,
            &scenario.topologies,
            SweepAxis::P,
            &[0.0, 0.1, 0.25, 0.5],
            &sweep_seeds(1000, 10),
            &unit_sweep_options(),
        )
        .unwrap();
        for arch in Level::ALL {
            let rows = rows_for(&result.rows, arch);
            assert_eq!(rows.len(), 4);
            for pair in rows.windows(2) {
                assert!(
                    pair[1].total_size_items <= pair[0].total_size_items * 1.02,
                    "{arch}: size grew from {} at p={} to {} at p={}",
                    pair[0].total_size_items,
                    pair[0].axis_value,
                    pair[1].total_size_items,
                    pair[1].axis_value
                );
            }
        }
    });
}

// Criterion 7: over the q grid on the same scenario, cache size decreases,
// price-of-fog stays within +/-0.05 of its q=0 value, and equals exactly 1
// at q=1.
#[test]
fn criterion_7_locality_trend() {
    criterion(7, "locality trend", || {
        let scenario = sweep_scenario(1000);
        let result = run_sweep(
            &scenario.requests,
            &scenario.topologies,
            SweepAxis::Q,
            &[0.0, 0.1, 0.25, 0.5, 1.0],
            &sweep_seeds(1000, 10),
            &unit_sweep_options(),
        )
        .unwrap();
        for arch in Level::ALL {
            let rows = rows_for(&result.rows, arch);
            assert_eq!(rows.len(), 5);
            for pair in rows.windows(2) {
                assert!(
                    pair[1].total_size_items <= pair[0].total_size_items * 1.02,
                    "{arch}: size grew from q={} to q={}",
                    pair[0].axis_value,
                    pair[1].axis_value
                );
            }
            assert!(
                rows.last().unwrap().total_size_items < rows[0].total_size_items,
                "{arch}: cache size did not decrease over the q grid"
            );

            let baseline = rows[0].price_of_fog.unwrap();
            for row in &rows {
                let pof = row.price_of_fog.unwrap();
                assert!(
                    (pof - baseline).abs() <= 0.05,
                    "{arch}: price-of-fog {pof} at q={} deviates more than 0.05 from {baseline}",
                    row.axis_value
                );
            }
            let at_one = rows.last().unwrap().price_of_fog.unwrap();
            assert_eq!(at_one, 1.0, "{arch}: price-of-fog at q=1 is {at_one}");
        }
    });
}

// Criterion 8: mean hit distance is ordered Core >= Pod >= Ring >= BS = 0 on
// centroid-positioned trees over 20 seeds, with at most 5% boundary
// violations tolerated.
#[test]
fn criterion_8_distance_ordering() {
    criterion(8, "distance ordering", || {
        let seeds = 20u64;
        let mut comparisons = 0u32;
        let mut violations = 0u32;
        for seed in 1..=seeds {
            let scenario = sweep_scenario(seed);
            let topology = &scenario.topologies["synth"];
            let opts = EvalOptions {
                target_hit_ratio: 0.5,
                mark: MarkOptions::default(),
                size_mode: SizeMode::Unit,
                architectures: Level::ALL.to_vec(),
            };
            let (eval, _plans) = evaluate_operator(&scenario.requests, topology, &opts).unwrap();
            let mean = |arch: Level| -> f64 {
                eval.reports
                    .iter()
                    .find(|r| r.architecture == arch)
                    .unwrap()
                    .distance
                    .mean_km
                    .unwrap()
            };
            assert_eq!(
                mean(Level::BaseStation),
                0.0,
                "seed {seed}: BS distance not 0"
            );
            assert!(mean(Level::Ring) >= 0.0);
            for (lower, higher) in [(Level::Ring, Level::Pod), (Level::Pod, Level::Core)] {
                comparisons += 1;
                if mean(lower) > mean(higher) + 1e-9 {
                    violations += 1;
                }
            }
        }
        let rate = f64::from(violations) / f64::from(comparisons);
        assert!(
            rate <= 0.05,
            "distance ordering violated in {violations}/{comparisons} comparisons"
        );
    });
}

// Criterion 9: two full sweep runs through the CLI with the same config and
// master seed produce byte-identical output files.
#[test]
fn criterion_9_end_to_end_determinism() {
    criterion(9, "end-to-end determinism", || {
        let bin = env!("CARGO_BIN_EXE_fogsim");
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("run.toml");
        std::fs::write(
            &config_path,
            r#"
mode = "synth"
master_seed = 77
unit_sizes = true

[synth]
n_users = 20
hours = 8
requests_per_user_hour = 2

[[synth.operators]]
name = "synth"
style = "small_cells"
n_cells = 60

[sweep]
axis = "q"
grid = [0.0, 0.5, 1.0]
seeds = 3
"#,
        )
        .unwrap();

        let run = |out: &Path| {
            for sub in ["synth", "sweep"] {
                let output = Command::new(bin)
                    .arg(sub)
                    .arg("--config")
                    .arg(&config_path)
                    .arg("--output-dir")
                    .arg(out)
                    .output()
                    .unwrap();
                assert!(
                    output.status.success(),
                    "{sub} failed: {}",
                    String::from_utf8_lossy(&output.stderr)
                );
            }
        };
        let dir_a = dir.path().join("a");
        let dir_b = dir.path().join("b");
        run(&dir_a);
        run(&dir_b);

        let mut names: Vec<String> = std::fs::read_dir(&dir_a)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(names.contains(&"sweep.csv".to_string()));
        assert!(names.contains(&"requests.csv".to_string()));
        for name in names {
            let a = std::fs::read(dir_a.join(&name)).unwrap();
            let b = std::fs::read(dir_b.join(&name)).unwrap();
            assert_eq!(a, b, "output file {name} differs between runs");
        }
    });
}
