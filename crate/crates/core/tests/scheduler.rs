use bmfpp::data::{build_grid, train_test_split, BlockGrid, PartitionStrategy, SparseRatings};
use bmfpp::eval::generate_synthetic;
use bmfpp::gibbs::{run_chain, BlockPriors, ChainContext, ModelConfig};
use bmfpp::posterior::predict_cells;
use bmfpp::scheduler::{
    aggregate_posteriors, block_path, execute_plan, plan_phases, BlockId, Phase, PlanOutput,
    PredictMode, RunOptions,
};
use bmfpp::Error;

fn fixture(seed: u64) -> (SparseRatings, SparseRatings) {
    let data = generate_synthetic(50, 40, 3, 0.2, 0.3, seed)
        .unwrap()
        .ratings;
    train_test_split(&data, 0.2, seed).unwrap()
}

fn run(
    train: &SparseRatings,
    test: &SparseRatings,
    grid: &BlockGrid,
    config: &ModelConfig,
    options: &RunOptions,
) -> PlanOutput {
    execute_plan(&plan_phases(grid), train, grid, test, config, options).unwrap()
}

#[test]
fn single_block_plan_equals_direct_chain() {
    let (train, test) = fixture(1);
    let config = ModelConfig::new(3).with_sweeps(10, 20);
    let grid = build_grid(&train, 1, 1, PartitionStrategy::Random, 4).unwrap();
    let out = run(&train, &test, &grid, &config, &RunOptions::new(2, 9));

    let ctx = ChainContext {
        rating_offset: train.mean_value().unwrap(),
        ..ChainContext::new(9, (0, 0))
    };
    let cells: Vec<_> = test.entries().iter().map(|r| r.cell()).collect();
    let direct = run_chain(&train, &BlockPriors::hierarchical(), &cells, &config, &ctx).unwrap();
    let block = &out.block(BlockId::ORIGIN).chain;
    assert_eq!(block.u, direct.u);
    assert_eq!(block.v, direct.v);
    assert_eq!(block.predictions, direct.predictions);
    let preds = predict_cells(&direct.predictions, config.tau, train.scale(), false).unwrap();
    assert_eq!(out.block_predictions, preds);
}

#[test]
fn worker_count_does_not_change_results() {
    let (train, test) = fixture(2);
    let config = ModelConfig::new(2).with_sweeps(5, 10);
    let grid = build_grid(&train, 3, 2, PartitionStrategy::Random, 2).unwrap();
    let outputs: Vec<_> = [1, 3, 16]
        .iter()
        .map(|&w| {
            let options = RunOptions {
                predict: PredictMode::Aggregated,
                ..RunOptions::new(w, 7)
            };
            run(&train, &test, &grid, &config, &options)
        })
        .collect();
    for other in &outputs[1..] {
        assert_eq!(other.report.metrics, outputs[0].report.metrics);
        assert_eq!(other.block_predictions, outputs[0].block_predictions);
        assert_eq!(other.aggregated, outputs[0].aggregated);
        for (a, b) in other.blocks.iter().zip(&outputs[0].blocks) {
            assert_eq!((&a.chain.u, &a.chain.v), (&b.chain.u, &b.chain.v));
        }
    }
}

#[test]
fn blocks_start_after_their_sources() {
    let (train, test) = fixture(3);
    let config = ModelConfig::new(2).with_sweeps(2, 3);
    let grid = build_grid(&train, 3, 4, PartitionStrategy::Random, 0).unwrap();
    let plan = plan_phases(&grid);
    let out = run(&train, &test, &grid, &config, &RunOptions::new(6, 1));
    assert!(out.report.dependencies_respected(&plan));
    assert_eq!(out.report.blocks.len(), 12);
    let sizes: Vec<_> = out.report.phases.iter().map(|p| p.blocks).collect();
    assert_eq!(sizes, vec![1, 5, 6]);
    let total: f64 = out.report.phases.iter().map(|p| p.seconds).sum();
    assert_eq!(out.report.total_seconds, total);
    assert_eq!(out.report.row_updates, 5 * (4 * 50 + 3 * 40));
    assert_eq!(out.report.sweeps, 12 * 5);
    let csv = out.report.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phase,i,j,rows,cols,nnz,sweeps,seconds"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn every_test_cell_is_predicted_once() {
    let (train, test) = fixture(4);
    let config = ModelConfig::new(2).with_sweeps(3, 5);
    let grid = build_grid(&train, 2, 3, PartitionStrategy::Random, 5).unwrap();
    let out = run(&train, &test, &grid, &config, &RunOptions::new(2, 3));
    let mut seen = vec![0; test.len()];
    for b in &out.blocks {
        assert_eq!(b.test_index.len(), b.chain.predictions.len());
        for &t in &b.test_index {
            seen[t] += 1;
        }
    }
    assert!(seen.iter().all(|&n| n == 1));
    assert!(out.block_predictions.iter().all(|p| p.mean.is_finite()));
    assert_eq!(out.report.metrics.n_test, test.len());
}

#[test]
fn aggregation_covers_all_rows_and_columns() {
    let (train, test) = fixture(5);
    let config = ModelConfig::new(2).with_sweeps(5, 20);
    let grid = build_grid(&train, 2, 2, PartitionStrategy::Random, 5).unwrap();
    let options = RunOptions {
        predict: PredictMode::Aggregated,
        clamp: true,
        ..RunOptions::new(1, 3)
    };
    let out = run(&train, &test, &grid, &config, &options);
    let agg = out.aggregated.as_ref().unwrap();
    assert_eq!((agg.u.len(), agg.v.len()), (50, 40));
    assert!(agg.u.iter().all(|s| s.n_samples == 2));
    let again = aggregate_posteriors(&grid, &out, config.jitter).unwrap();
    assert_eq!(&again, agg);
    let scale = train.scale();
    let preds = out.predictions(PredictMode::Aggregated).unwrap();
    assert!(preds.iter().all(|p| scale.contains(p.mean)));
    assert!(out.report.metrics.rmse_aggregated.is_some());
}

#[test]
fn single_column_group_aggregates_to_block_posteriors() {
    let (train, test) = fixture(6);
    let config = ModelConfig::new(2).with_sweeps(2, 4);
    let grid = build_grid(&train, 2, 1, PartitionStrategy::Contiguous, 0).unwrap();
    let options = RunOptions {
        predict: PredictMode::Aggregated,
        ..RunOptions::new(1, 3)
    };
    let out = run(&train, &test, &grid, &config, &options);
    let agg = out.aggregated.unwrap();
    for b in &out.blocks {
        for (local, &global) in b.rows.iter().enumerate() {
            assert_eq!(agg.u[global], b.chain.u[local]);
        }
    }
}

#[test]
fn resumes_from_phase_checkpoints() {
    let (train, test) = fixture(7);
    let config = ModelConfig::new(2).with_sweeps(3, 5);
    let grid = build_grid(&train, 2, 3, PartitionStrategy::Random, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let options = RunOptions {
        checkpoint_dir: Some(dir.path().to_owned()),
        ..RunOptions::new(2, 11)
    };
    let first = run(&train, &test, &grid, &config, &options);
    for b in &first.blocks {
        assert!(block_path(dir.path(), b.id).exists());
    }
    std::fs::remove_file(block_path(dir.path(), BlockId::new(1, 2))).unwrap();
    let second = run(&train, &test, &grid, &config, &options);
    for r in &second.report.blocks {
        assert_eq!(r.resumed, r.id() != BlockId::new(1, 2), "block {}", r.id());
    }
    assert_eq!(second.block_predictions, first.block_predictions);
    assert_eq!(second.report.metrics, first.report.metrics);

    // A different seed must not reuse the stored blocks.
    let reseeded = RunOptions {
        seed: 12,
        ..options.clone()
    };
    let third = run(&train, &test, &grid, &config, &reseeded);
    assert!(third.report.blocks.iter().all(|r| !r.resumed));
    assert!(third
        .report
        .blocks
        .iter()
        .all(|r| r.phase != Phase::A || r.i == 0));
}

#[test]
fn invalid_inputs_are_rejected() {
    let (train, test) = fixture(8);
    let config = ModelConfig::new(2).with_sweeps(1, 1);
    let grid = build_grid(&train, 2, 2, PartitionStrategy::Random, 1).unwrap();
    let plan = plan_phases(&grid);
    let other = plan_phases(&build_grid(&train, 1, 2, PartitionStrategy::Random, 1).unwrap());
    let opts = RunOptions::new(1, 0);
    assert!(execute_plan(&other, &train, &grid, &test, &config, &opts).is_err());
    assert!(execute_plan(&plan, &train, &grid, &test, &config, &RunOptions::new(0, 0)).is_err());
    let small = SparseRatings::new(3, 3, vec![], None).unwrap();
    assert!(execute_plan(&plan, &train, &grid, &small, &config, &opts).is_err());
}

#[test]
fn failing_block_is_named() {
    let (train, test) = fixture(9);
    let mut config = ModelConfig::new(2).with_sweeps(1, 2);
    // An absurd noise precision overflows the conditional precision.
    config.tau = f64::MAX;
    let grid = build_grid(&train, 1, 1, PartitionStrategy::Random, 1).unwrap();
    let err = execute_plan(
        &plan_phases(&grid),
        &train,
        &grid,
        &test,
        &config,
        &RunOptions::new(1, 0),
    )
    .unwrap_err();
    match err {
        Error::Block { block, .. } => assert_eq!(block, BlockId::ORIGIN),
        other => panic!("{other}"),
    }
    assert!(Error::Block {
        block: BlockId::ORIGIN,
        source: Box::new(Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN
        })
    }
    .is_numerical());
}
