use pdsm::bench::{mean_rounds, run_bench, summarize, to_csv, BenchConfig, PlanShape, CSV_HEADER};
use pdsm::generator::Profile;

fn config(p_values: Vec<usize>, n_values: Vec<usize>, seeds: u64, shape: PlanShape) -> BenchConfig {
    BenchConfig {
        p_values,
        n_values,
        seeds,
        shape,
        profile: Profile::Uniform,
        jobs: 1,
    }
}

#[test]
fn one_record_per_run_within_the_bound() {
    for shape in [PlanShape::Path, PlanShape::Star, PlanShape::Random] {
        let records = run_bench(&config(vec![2, 3, 5], vec![1, 3], 4, shape)).unwrap();
        assert_eq!(records.len(), 3 * 2 * 4);
        for r in &records {
            assert!(r.total_rounds <= r.bound);
            if r.n == 1 {
                assert_eq!(r.total_rounds, r.p - 1);
            }
        }
    }
}

#[test]
fn csv_has_a_header_and_one_line_per_record() {
    let records = run_bench(&config(vec![3], vec![2, 4], 3, PlanShape::Path)).unwrap();
    let csv = to_csv(&records);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + records.len());
    assert!(lines[1].starts_with("3,2,0,path,"));
}

#[test]
fn parallel_runs_match_sequential_runs() {
    let seq = run_bench(&config(vec![3, 4], vec![4], 8, PlanShape::Random)).unwrap();
    let par = run_bench(&BenchConfig {
        jobs: 4,
        ..config(vec![3, 4], vec![4], 8, PlanShape::Random)
    })
    .unwrap();
    let rounds = |rs: &[pdsm::bench::BenchRecord]| {
        rs.iter()
            .map(|r| (r.p, r.n, r.seed, r.total_rounds))
            .collect::<Vec<_>>()
    };
    assert_eq!(rounds(&seq), rounds(&par));
}

#[test]
fn doubling_parties_roughly_doubles_rounds() {
    let records = run_bench(&config(vec![4, 8], vec![8], 50, PlanShape::Path)).unwrap();
    let means = mean_rounds(&records);
    let ratio = means[&(8, 8)] / means[&(4, 8)];
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    let summary = summarize(&records);
    assert!(summary.vs_parties.contains_key(&8));
}

#[test]
fn empty_ranges_are_rejected() {
    assert!(run_bench(&config(vec![], vec![2], 1, PlanShape::Path)).is_err());
    assert!(run_bench(&config(vec![3], vec![2], 0, PlanShape::Path)).is_err());
}
