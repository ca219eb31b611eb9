use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spikecodec::codec::{read_aer, Tensor};
use spikecodec::{features, AudioSignal, Frontend};

const FS: u32 = 20_000;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spikecodec"));
    cmd.env_remove("SPIKECODEC_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_wav(path: &Path, rate: u32, samples: &[f64]) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample((s * 32767.0).round() as i16).unwrap();
    }
    w.finalize().unwrap();
}

/// Tone gliding 300 Hz -> 3 kHz under a linear amplitude ramp.
fn ramp(seconds: f64) -> Vec<f64> {
    let n = (seconds * FS as f64) as usize;
    let (f0, f1) = (300.0, 3000.0);
    (0..n)
        .map(|i| {
            let t = i as f64 / FS as f64;
            let phase = 2.0 * PI * (f0 * t + (f1 - f0) * t * t / (2.0 * seconds));
            0.8 * (i as f64 / n as f64) * phase.sin()
        })
        .collect()
}

fn tone(hz: f64, seconds: f64, amp: f64) -> Vec<f64> {
    let n = (seconds * FS as f64) as usize;
    (0..n).map(|i| amp * (2.0 * PI * hz * i as f64 / FS as f64).sin()).collect()
}

/// Small corpus of distinct utterances.
fn corpus(dir: &Path) -> Vec<PathBuf> {
    let clips = [
        ("a.wav", ramp(0.6)),
        ("b.wav", tone(700.0, 0.5, 0.3)),
        ("c.wav", tone(1800.0, 0.7, 0.6).iter().zip(ramp(0.7)).map(|(x, y)| 0.5 * (x + y)).collect()),
        ("d.wav", tone(450.0, 0.4, 0.5)),
    ];
    clips
        .into_iter()
        .map(|(name, s)| {
            let path = dir.join(name);
            write_wav(&path, FS, &s);
            path
        })
        .collect()
}

fn record_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
        .to_string()
}

fn table_column(table: &str, col: usize) -> Vec<f64> {
    table.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn empty_input_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["encode", "--encoder", "sod", "--params", "delta=0.1", "--out", p(dir.path())]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = run(&["features", "--out", p(dir.path()), p(&dir.path().join("*.wav"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn usage_mistakes_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("x.wav");
    write_wav(&wav, FS, &tone(500.0, 0.3, 0.5));
    let out_dir = dir.path().join("out");
    for args in [
        vec!["encode", "--encoder", "nope", "--params", "delta=0.1", "--out", p(&out_dir), p(&wav)],
        vec!["encode", "--encoder", "sod", "--out", p(&out_dir), p(&wav)],
        vec!["encode", "--encoder", "sod", "--params", "delta=0.1", p(&wav)],
        vec!["encode", "--encoder", "ttfs", "--params", "delta=0.1,tau_min_ms=5", "--out", p(&out_dir), p(&wav)],
        vec!["decode", "--out", p(&out_dir), p(&wav)],
        vec!["sweep", "--encoder", "sod", "--grid", "log:1:0.1:0", p(&wav)],
        vec!["features", "--frontend", "mfcc", "--out", p(&out_dir), p(&wav)],
        vec!["features", "--parallelism", "0", "--out", p(&out_dir), p(&wav)],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn wrong_sample_rate_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("cd.wav");
    write_wav(&wav, 44_100, &tone(500.0, 0.2, 0.5));
    let out = run(&["features", "--out", p(&dir.path().join("out")), p(&wav)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("expected 20000 Hz"), "{}", stderr(&out));
}

#[test]
fn one_bad_file_fails_the_run_but_not_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.wav");
    let bad = dir.path().join("bad.wav");
    write_wav(&good, FS, &tone(500.0, 0.3, 0.5));
    fs::write(&bad, b"not a wav").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["encode", "--encoder", "sod", "--params", "delta=0.05", "--out", p(&out_dir), p(&good), p(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(out_dir.join("good.aer").exists());
    assert!(!out_dir.join("bad.aer").exists());
}

#[test]
fn features_have_frontend_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("one.wav");
    write_wav(&wav, FS, &ramp(1.0));
    let out_dir = dir.path().join("out");
    let out = run(&["features", "--out", p(&out_dir), p(&wav)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let t = Tensor::read(out_dir.join("one.tensor")).unwrap();
    assert_eq!(t.dims, vec![24, 1000]);
    assert!(t.data.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(t.data.iter().any(|&v| v == 1.0));

    let out = run(&["features", "--frontend", "spectrogram", "--out", p(&out_dir), p(&wav)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(Tensor::read(out_dir.join("one.tensor")).unwrap().dims, vec![24, 996]);
}

#[test]
fn silence_encodes_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("silence.wav");
    write_wav(&wav, FS, &vec![0.0; FS as usize]);
    let out_dir = dir.path().join("out");
    let out = run(&["encode", "--encoder", "sod", "--params", "delta=0.01", "--out", p(&out_dir), p(&wav)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_aer(out_dir.join("silence.aer")).unwrap().len(), 0);
    let metrics = fs::read_to_string(out_dir.join("silence.metrics")).unwrap();
    assert_eq!(record_value(&metrics, "spike_density").parse::<f64>().unwrap(), 0.0);
    assert_eq!(record_value(&metrics, "file"), "silence.wav");
}

/// ON spikes of a row under the reference-moves-on-spike rule.
fn on_count(y: &[f64], delta: f64) -> usize {
    let mut reference = y[0];
    let mut count = 0;
    for &v in &y[1..] {
        if v - reference >= delta {
            count += 1;
            reference = v;
        } else if reference - v >= delta {
            reference = v;
        }
    }
    count
}

#[test]
fn ramp_spike_count_matches_direct_rule() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("ramp.wav");
    write_wav(&wav, FS, &ramp(1.0));
    let out_dir = dir.path().join("out");
    let out = run(&["encode", "--encoder", "sod-on", "--params", "delta=0.1", "--out", p(&out_dir), p(&wav)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let spikes = read_aer(out_dir.join("ramp.aer")).unwrap();

    let samples: Vec<f64> = hound::WavReader::open(&wav)
        .unwrap()
        .samples::<i16>()
        .map(|s| f64::from(s.unwrap()) / 32768.0)
        .collect();
    let tf = features::extract(&AudioSignal::new(samples, FS as f64).unwrap(), Frontend::Cochleagram)
        .unwrap()
        .tf;
    let expected: usize = tf.channels().map(|row| on_count(row, 0.1)).sum();
    assert!(expected > 0);
    assert_eq!(spikes.len(), expected);
}

fn encode_all(dir: &Path, inputs: &[PathBuf], threads: &str, encoder: &str, params: &str) -> PathBuf {
    let out_dir = dir.join(format!("{encoder}-{threads}"));
    let mut args = vec!["encode", "--parallelism", threads, "--encoder", encoder, "--params", params];
    args.extend(["--out", p(&out_dir)]);
    args.extend(inputs.iter().map(|x| p(x)));
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out_dir
}

#[test]
fn outputs_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = corpus(dir.path());
    for (encoder, params) in [("sod", "delta=0.02"), ("ttfs", "delta=0.1"), ("lif", "delta=0.05")] {
        let one = encode_all(dir.path(), &inputs, "1", encoder, params);
        let four = encode_all(dir.path(), &inputs, "4", encoder, params);
        for stem in ["a", "b", "c", "d"] {
            for ext in ["aer", "metrics"] {
                let name = format!("{stem}.{ext}");
                assert_eq!(fs::read(one.join(&name)).unwrap(), fs::read(four.join(&name)).unwrap(), "{encoder} {name}");
            }
        }
    }

    let corpus_dir = p(dir.path());
    let sweep = |threads: &str| {
        let out = run(&["sweep", "--parallelism", threads, "--encoder", "lif", "--grid", "log:0.01:0.3:4", corpus_dir]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out.stdout
    };
    assert_eq!(sweep("1"), sweep("4"));
}

#[test]
fn environment_sets_default_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = corpus(dir.path());
    let out = bin()
        .env("SPIKECODEC_THREADS", "0")
        .args(["features", "--out", p(&dir.path().join("o")), p(&inputs[0])])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = bin()
        .env("SPIKECODEC_THREADS", "0")
        .args(["features", "--parallelism", "2", "--out", p(&dir.path().join("o")), p(&inputs[0])])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn decode_pads_to_classifier_size() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = corpus(dir.path());
    let aer_dir = encode_all(dir.path(), &inputs, "2", "sod", "delta=0.05");
    let silence = dir.path().join("quiet.wav");
    write_wav(&silence, FS, &vec![0.0; 4000]);
    let quiet_dir = encode_all(dir.path(), &[silence], "1", "sod-on", "delta=0.05");

    let tensors = dir.path().join("tensors");
    let out = run(&["decode", "--pad-frames", "1500", "--out", p(&tensors), p(&aer_dir), p(&quiet_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for stem in ["a", "b", "c", "d", "quiet"] {
        let t = Tensor::read(tensors.join(format!("{stem}.tensor"))).unwrap();
        assert_eq!(t.dims, vec![64, 1500]);
        // channels past the 2x24 full-SOD rows and frames past the utterance stay zero
        assert!(t.data[48 * 1500..].iter().all(|&v| v == 0.0));
        assert!(t.data.chunks(1500).all(|row| row[1000..].iter().all(|&v| v == 0.0)));
    }
    let quiet = Tensor::read(tensors.join("quiet.tensor")).unwrap();
    assert!(quiet.data.iter().all(|&v| v == 0.0));
    let a = Tensor::read(tensors.join("a.tensor")).unwrap();
    assert!(a.data.iter().any(|&v| v > 0.0));
}

#[test]
fn sweep_table_and_monotone_density() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let table_path = dir.path().join("tables/sod.csv");
    let out = run(&["sweep", "--encoder", "sod", "--grid", "log:0.001:0.5:6", "--out", p(&table_path), p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(&table_path).unwrap();
    assert!(table.starts_with("param,density,snr_db,bcr_raw,bcr_mfcc\n"));
    assert_eq!(table.lines().count(), 7);
    let density = table_column(&table, 1);
    assert!(density.windows(2).all(|w| w[1] <= w[0]), "{density:?}");
    assert!(density[0] > density[5]);

    let out = run(&["sweep", "--encoder", "ttfs", "--grid", "0.2", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert_eq!(table_column(&table, 0), vec![0.2]);
}

#[test]
fn bsa_optimize_is_seeded_and_feeds_encode() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = corpus(dir.path());
    let optimize = |name: &str, seed: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["bsa-optimize", "--seed", seed, "--subset-fraction", "0.5", "--out", p(&path)];
        args.extend(extra);
        args.push(p(dir.path()));
        let out = run(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(path).unwrap()
    };
    let grid = ["--cutoffs", "50,200", "--lengths", "9,21", "--thresholds", "0.01,0.1"];
    let first = optimize("a.params", "5", &grid);
    let again = optimize("b.params", "5", &grid);
    assert_eq!(first, again);

    let single = optimize("c.params", "1", &["--cutoffs", "80", "--lengths", "15", "--thresholds", "0.03"]);
    assert_eq!(record_value(&single, "cutoff_hz"), "80.0");
    assert_eq!(record_value(&single, "filter_len"), "15");
    assert_eq!(record_value(&single, "threshold"), "0.03");
    assert_eq!(record_value(&single, "filter_taps").split(',').count(), 15);

    let params = dir.path().join("a.params");
    let out_dir = dir.path().join("bsa");
    let out = run(&["encode", "--encoder", "bsa", "--bsa-params", p(&params), "--out", p(&out_dir), p(&inputs[0])]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics = fs::read_to_string(out_dir.join("a.metrics")).unwrap();
    assert_eq!(record_value(&metrics, "threshold"), record_value(&first, "threshold"));
    let tensors = dir.path().join("bsa-tensors");
    let out = run(&["decode", "--pad-frames", "1000", "--bsa-params", p(&params), "--out", p(&tensors), p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(Tensor::read(tensors.join("a.tensor")).unwrap().dims, vec![64, 1000]);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = corpus(dir.path());
    let out_dir = dir.path().join("from-config");
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        format!(
            "# encode settings\nencoder = sod-off\nparams = delta=0.05\nfrontend = spectrogram\nout = {}\ninputs = {}\n",
            out_dir.display(),
            inputs[1].display()
        ),
    )
    .unwrap();
    let out = run(&["encode", "--config", p(&config)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics = fs::read_to_string(out_dir.join("b.metrics")).unwrap();
    assert_eq!(record_value(&metrics, "encoder"), "sod_off");
    assert_eq!(record_value(&metrics, "frontend"), "spectrogram");

    // flags win over the file
    let out = run(&["encode", "--config", p(&config), "--frontend", "cochleagram", p(&inputs[2])]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics = fs::read_to_string(out_dir.join("c.metrics")).unwrap();
    assert_eq!(record_value(&metrics, "frontend"), "cochleagram");
}
