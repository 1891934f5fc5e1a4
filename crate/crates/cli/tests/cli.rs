use std::path::Path;
use std::process::Command as Process;

use paretolab_cli::*;
use paretolab_core::{sample_poisson, DensityField, SampleConfig};
use proptest::prelude::*;

fn parse(args: &[&str]) -> RunConfig {
    let mut argv = vec!["paretolab"];
    argv.extend_from_slice(args);
    parse_config(argv).unwrap()
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_paretolab"))
}

#[test]
fn flags_parse_into_a_config() {
    let cfg = parse(&[
        "cd", "--d", "2", "--n", "1000000", "--trials", "20", "--seed", "7",
    ]);
    assert_eq!(cfg.command, Command::Cd);
    assert_eq!(cfg.params.d, Some(2));
    assert_eq!(cfg.params.n, Some(1_000_000));
    assert_eq!(cfg.params.trials, Some(20));
    assert_eq!(cfg.params.seed, Some(7));
}

#[test]
fn ladders_accept_scientific_notation() {
    let cfg = parse(&[
        "rates",
        "--d",
        "2",
        "--R",
        "0.25",
        "--ns",
        "1e3,1e4,1e5",
        "--grid",
        "256",
    ]);
    assert_eq!(cfg.command, Command::Rates);
    assert_eq!(cfg.params.ns, Some(vec![1_000, 10_000, 100_000]));
    assert_eq!(cfg.params.radius, Some(0.25));
    assert_eq!(cfg.params.grid, Some(256));
    assert_eq!(parse_count("2.5e3"), Ok(2500));
    assert_eq!(parse_count(" 42 "), Ok(42));
    assert!(parse_count("1e-3").is_err());
    assert!(parse_count("-5").is_err());
    assert!(parse_count("ten").is_err());
    let neg = parse(&[
        "solve",
        "--d",
        "2",
        "--grid",
        "8",
        "--density",
        "affine",
        "--slope",
        "-0.25,0.5",
    ]);
    assert_eq!(neg.params.slope, Some(vec![-0.25, 0.5]));
}

#[test]
fn missing_key_is_named() {
    let err = resolve(parse(&["cd", "--n", "1000"])).unwrap_err();
    assert_eq!(err.to_string(), "missing key: d");
    assert_eq!(err.exit_code(), 2);
    let err = resolve(parse(&[
        "rates",
        "--d",
        "2",
        "--ns",
        "1e3,1e4,1e5",
        "--grid",
        "64",
    ]))
    .unwrap_err();
    assert_eq!(err.to_string(), "missing key: R");
    let err = resolve(parse(&[
        "boundary", "--d", "2", "--R", "0.2", "--eps", "0.3", "--n", "100",
    ]))
    .unwrap_err();
    assert!(err.to_string().starts_with("invalid value for key eps"), "{err}");
    let err = resolve(parse(&["cd", "--d", "2", "--n", "100", "--trials", "1"])).unwrap_err();
    assert!(err.to_string().contains("trials"));
    assert!(parse_config(["paretolab", "nonsense"]).is_err());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"command": "cd", "params": {"d": 3, "n": "1e4", "trials": 5, "seed": 9}}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let cfg = parse(&["cd", "--config", p, "--n", "2e3", "--seed", "1"]);
    assert_eq!(cfg.params.d, Some(3));
    assert_eq!(cfg.params.n, Some(2000));
    assert_eq!(cfg.params.trials, Some(5));
    assert_eq!(cfg.params.seed, Some(1));
    assert!(parse_config(["paretolab", "cell", "--config", p]).is_err());

    std::fs::write(&path, r#"{"params": {"d": 2, "ns": [1e3, 1000000]}}"#).unwrap();
    let cfg = parse(&["cell", "--config", p]);
    assert_eq!(cfg.params.ns, Some(vec![1000, 1_000_000]));

    std::fs::write(&path, r#"{"params": {"dim": 2}}"#).unwrap();
    let err = parse_config(["paretolab", "cd", "--config", p]).unwrap_err();
    assert!(err.to_string().contains("dim"), "{err}");
}

#[test]
fn echo_round_trips_and_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let cfg = parse(&[
        "rates",
        "--d",
        "2",
        "--R",
        "0.25",
        "--ns",
        "1e3,4e3,16e3",
        "--grid",
        "64",
        "--trials",
        "3",
        "--threads",
        "1",
        "--out",
        first.to_str().unwrap(),
    ]);
    let report = execute(cfg).unwrap();
    assert!(report.files.iter().all(|f| f.exists()));
    let echo = std::fs::read_to_string(first.join("config.echo.json")).unwrap();
    let resolved = RunConfig::from_json(&echo).unwrap();
    assert_eq!(resolved.params.seed, Some(0));
    assert_eq!(resolved.params.density.as_deref(), Some("constant"));
    assert_eq!(RunConfig::from_json(&resolved.to_json()).unwrap(), resolved);

    let second = dir.path().join("second");
    let again = parse(&[
        "rates",
        "--config",
        first.join("config.echo.json").to_str().unwrap(),
        "--threads",
        "8",
        "--out",
        second.to_str().unwrap(),
    ]);
    execute(again).unwrap();
    for name in ["rates.csv", "deviation.csv"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(first.join("rates.svg").exists());
}

#[test]
fn sort_reads_a_cloud_file() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = sample_poisson(
        &DensityField::constant(3, 1.0).unwrap(),
        &SampleConfig::poisson_unit(3, 300, 4).unwrap(),
    )
    .unwrap();
    let input = dir.path().join("cloud.csv");
    cloud.write_csv(std::fs::File::create(&input).unwrap()).unwrap();
    let out = dir.path().join("out");
    let report = execute(parse(&[
        "sort",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]))
    .unwrap();
    let labels = std::fs::read_to_string(out.join("labels.csv")).unwrap();
    assert!(labels.starts_with("point_index,x0,x1,x2,depth,front\n"));
    assert_eq!(labels.lines().count(), cloud.len() + 1);
    assert_eq!(report.summary["points"], cloud.len());
    let err = execute(parse(&["sort", "--input", input.to_str().unwrap(), "--n", "5"])).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn small_runs_of_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 9] = [
        &["chain", "--d", "2", "--n", "2000", "--R", "0.3"],
        &["depth", "--d", "2", "--n", "500", "--grid", "32"],
        &["cell", "--d", "2", "--ns", "1e3,2e3,4e3", "--trials", "3"],
        &["solve", "--d", "3", "--grid", "16", "--R", "0.3"],
        &[
            "rates-full",
            "--d",
            "2",
            "--ns",
            "1e3,2e3,4e3",
            "--grid",
            "32",
            "--trials",
            "2",
        ],
        &[
            "semiconvexity",
            "--d",
            "2",
            "--grid",
            "128",
            "--radii",
            "0.45,0.4,0.35",
        ],
        &[
            "boundary", "--d", "2", "--R", "0.3", "--eps", "0.1", "--n", "5e3", "--trials", "2",
        ],
        &["cover-check", "--d", "3", "--eps", "0.2", "--n", "1000"],
        &["cd", "--d", "2", "--n", "5e3", "--trials", "2"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let mut argv = args.to_vec();
        argv.extend(["--out", out.to_str().unwrap()]);
        let report = execute(parse(&argv)).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        let name = args[0];
        assert!(out.join("config.echo.json").exists());
        assert!(out.join(format!("{name}.summary.json")).exists(), "{name}");
        assert!(report.summary["wall_seconds"].as_f64().unwrap() >= 0.0);
    }
    let cover = std::fs::read_to_string(dir.path().join("run7/cover.csv")).unwrap();
    let rate: f64 = cover
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(rate, 1.0);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        bin()
            .args(args)
            .env("PARETOLAB_OUT", dir.path())
            .output()
            .unwrap()
    };
    let ok = run(&["chain", "--d", "2", "--n", "100"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(dir.path().join("chain.csv").exists());
    let missing = run(&["cd", "--n", "100"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing key: d"));
    assert_eq!(run(&["unknown"]).status.code(), Some(2));
    let coarse = run(&[
        "rates",
        "--d",
        "2",
        "--R",
        "0.25",
        "--ns",
        "1e3,1e4,1e5",
        "--grid",
        "8",
    ]);
    assert_eq!(coarse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&coarse.stderr).contains("grid too coarse"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn legend_entries(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .matches(r#"class="legend""#)
        .count()
}

#[test]
fn plots() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.svg");
    let xs = [1e3, 1e4, 1e5, 1e6];
    let ys = [0.5, 0.3, 0.18, 0.11];
    emit_plot(&[Series::new("upper", &xs, &ys)], PlotStyle::LogLog, &one).unwrap();
    assert!(std::fs::metadata(&one).unwrap().len() > 0);
    assert_eq!(legend_entries(&one), 1);
    assert!(std::fs::read_to_string(&one).unwrap().contains("slope"));

    let two = dir.path().join("two.svg");
    let series = [
        Series::new("a", &xs, &ys),
        Series::new("b", &xs, &[1.0, 2.0, 3.0, 4.0]),
    ];
    emit_plot(&series, PlotStyle::Linear, &two).unwrap();
    assert_eq!(legend_entries(&two), 2);

    let err = emit_plot(&[], PlotStyle::LogLog, &dir.path().join("none.svg")).unwrap_err();
    assert!(matches!(err, CliError::EmptySeries));
    let err = emit_plot(
        &[Series::new("e", &[], &[])],
        PlotStyle::Linear,
        &dir.path().join("e.svg"),
    )
    .unwrap_err();
    assert!(matches!(err, CliError::EmptySeries));
    let bad = [Series::new("neg", &[1.0, 2.0], &[1.0, -1.0])];
    assert!(emit_plot(&bad, PlotStyle::LogLog, &dir.path().join("neg.svg")).is_err());
    assert!(emit_plot(&series, PlotStyle::Linear, &dir.path().join("missing/dir.svg")).is_err());
}

fn arb_params() -> impl Strategy<Value = Params> {
    let f = || proptest::option::of(-1e6f64..1e6);
    let v = || proptest::option::of(proptest::collection::vec(-10f64..10.0, 1..5));
    (
        (
            proptest::option::of(2usize..6),
            proptest::option::of(1u64..1 << 50),
            proptest::option::of(proptest::collection::vec(1u64..1 << 40, 1..6)),
            proptest::option::of(any::<u64>()),
            f(),
            f(),
            proptest::option::of(1usize..4096),
        ),
        (
            proptest::option::of("[a-z]{1,8}"),
            f(),
            v(),
            v(),
            v(),
            proptest::option::of(any::<u64>()),
            proptest::option::of("[a-z/]{1,12}"),
        ),
    )
        .prop_map(
            |((d, n, ns, trials, radius, eps, grid), (density, rho0, slope, p, radii, seed, out))| Params {
                d,
                n,
                ns,
                trials,
                radius,
                eps,
                grid,
                density,
                rho0,
                slope,
                p,
                radii,
                seed,
                out: out.map(Into::into),
                ..Params::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_through_json(params in arb_params(), k in 0usize..11) {
        let commands = [
            Command::Sort, Command::Depth, Command::Chain, Command::Cell, Command::Solve,
            Command::Rates, Command::RatesFull, Command::Cd, Command::Semiconvexity,
            Command::Boundary, Command::CoverCheck,
        ];
        let cfg = RunConfig { command: commands[k], params };
        prop_assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
