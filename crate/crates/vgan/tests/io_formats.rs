use proptest::prelude::*;
use vgan::io::textgrid::TextGrid;
use vgan::io::*;
use vgan::Error;
use vgan_core::dsp::AudioBuffer;
use vgan_core::lip::LipIndexMap;
use vgan_core::model::TargetKind;
use vgan_core::nn::{VganConfig, VganModel};
use vgan_core::segment::{Interval, SegmentTier};
use vgan_core::linalg::Matrix;

fn wav_bytes(channels: u16, rate: u32, frames: &[Vec<i16>]) -> Vec<u8> {
    let data: Vec<u8> = frames.iter().flatten().flat_map(|s| s.to_le_bytes()).collect();
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&channels.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
    b.extend_from_slice(&(2 * channels).to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&(data.len() as u32).to_le_bytes());
    b.extend_from_slice(&data);
    b
}

#[test]
fn wav_silence() {
    let a = decode_wav(&wav_bytes(1, 16000, &vec![vec![0]; 16000])).unwrap();
    assert_eq!(a.samples().len(), 16000);
    assert!(a.samples().iter().all(|&s| s == 0.0));
    assert_eq!(a.sample_rate(), 16000);
}

#[test]
fn wav_full_scale_square() {
    let frames: Vec<Vec<i16>> = (0..100).map(|i| vec![if i % 2 == 0 { 32767 } else { -32767 }]).collect();
    let a = decode_wav(&wav_bytes(1, 16000, &frames)).unwrap();
    for (i, &s) in a.samples().iter().enumerate() {
        let want = if i % 2 == 0 { 32767.0 / 32768.0 } else { -32767.0 / 32768.0 };
        assert_eq!(s, want);
    }
}

#[test]
fn wav_stereo_keeps_channel_zero() {
    let frames: Vec<Vec<i16>> = (0..50).map(|i| vec![i as i16, -1000]).collect();
    let a = decode_wav(&wav_bytes(2, 22050, &frames)).unwrap();
    assert_eq!(a.samples().len(), 50);
    assert_eq!(a.samples()[7], 7.0 / 32768.0);
}

#[test]
fn wav_errors_name_chunk() {
    let mut b = wav_bytes(1, 16000, &vec![vec![0]; 100]);
    b.truncate(b.len() - 10);
    match decode_wav(&b) {
        Err(Error::Format(m)) => assert!(m.contains("'data'"), "{m}"),
        other => panic!("{other:?}"),
    }
    let mut float = wav_bytes(1, 16000, &vec![vec![0]; 10]);
    float[20] = 3;
    match decode_wav(&float) {
        Err(Error::Format(m)) => assert!(m.contains("'fmt '"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wav_encode_roundtrip() {
    let samples: Vec<f64> = (0..800).map(|i| ((i as f64) * 0.05).sin() * 0.5).collect();
    let a = AudioBuffer::new(samples, 16000).unwrap();
    let b = decode_wav(&encode_wav(&a)).unwrap();
    for (x, y) in a.samples().iter().zip(b.samples()) {
        assert!((x - y).abs() <= 0.5 / 32768.0 + 1e-15);
    }
}

proptest! {
    #[test]
    fn wav_length_is_data_bytes_over_frame(channels in 1u16..4, n in 0usize..300) {
        let frames: Vec<Vec<i16>> = (0..n).map(|i| vec![i as i16; channels as usize]).collect();
        let bytes = wav_bytes(channels, 16000, &frames);
        let a = decode_wav(&bytes).unwrap();
        prop_assert_eq!(a.samples().len(), (bytes.len() - 44) / (2 * channels as usize));
        prop_assert_eq!(a.samples().len(), n);
    }
}

const ONE_TIER: &str = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "syllable"
        xmin = 0
        xmax = 1
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 1
            text = "a"
"#;

#[test]
fn textgrid_one_interval() {
    let tg = parse_textgrid(ONE_TIER).unwrap();
    assert_eq!(tg.tiers.len(), 1);
    assert_eq!(tg.tiers[0].name(), "syllable");
    assert_eq!(tg.tiers[0].intervals(), &[Interval::new(0.0, 1.0, "a")]);
    assert!(tg.warnings.is_empty());
}

#[test]
fn textgrid_point_tier_skipped() {
    let text = r#"File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "TextTier"
        name = "events"
        xmin = 0
        xmax = 1
        points: size = 2
        points [1]:
            number = 0.25
            mark = "x"
        points [2]:
            number = 0.5
            mark = "y"
"#;
    let tg = parse_textgrid(text).unwrap();
    assert!(tg.tiers.is_empty());
    assert_eq!(tg.warnings.len(), 1);
}

#[test]
fn textgrid_escaped_quotes_and_errors() {
    let quoted = ONE_TIER.replace(r#"text = "a""#, r#"text = "say ""a"" now""#);
    assert_eq!(parse_textgrid(&quoted).unwrap().tiers[0].intervals()[0].label, r#"say "a" now"#);

    let mismatch = ONE_TIER.replace("intervals: size = 1", "intervals: size = 2");
    match parse_textgrid(&mismatch) {
        Err(Error::Parse { line, .. }) => assert!(line >= 18, "line {line}"),
        other => panic!("{other:?}"),
    }
    let header = ONE_TIER.replace("ooTextFile", "binary");
    assert!(matches!(parse_textgrid(&header), Err(Error::Parse { line: 1, .. })));
}

fn arb_tier() -> impl Strategy<Value = SegmentTier> {
    (
        "[a-z]{1,8}",
        prop::collection::vec((0.01f64..2.0, 0.0f64..1.0, "[a-z\" ü]{0,6}"), 0..12),
    )
        .prop_map(|(name, parts)| {
            let mut t = 0.0;
            let ivs = parts
                .into_iter()
                .map(|(len, gap, label)| {
                    let start = t + gap;
                    t = start + len;
                    Interval::new(start, t, label)
                })
                .collect();
            SegmentTier::new(name, ivs).unwrap()
        })
}

proptest! {
    #[test]
    fn textgrid_roundtrip(tiers in prop::collection::vec(arb_tier(), 0..4)) {
        let text = serialize_textgrid(&tiers);
        let TextGrid { tiers: back, warnings } = parse_textgrid(&text).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(&back, &tiers);
        prop_assert_eq!(serialize_textgrid(&back), text);
    }
}

#[test]
fn segments_csv_rules() {
    let t = parse_segments_csv("start,end,label\n1.0,2.0,ba\n0.0,0.5,ma\n", "syllable").unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t.intervals()[0].label, "ma");
    match parse_segments_csv("start,end,label\n0.0,1.0,a\n0.5,2.0,b\n", "s") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(parse_segments_csv("start,end,label\n1.0,1.0,a\n", "s").is_err());
    let back = parse_segments_csv(&write_segments_csv(&t).unwrap(), "syllable").unwrap();
    assert_eq!(back, t);
}

fn landmark_text(frames: usize, dt: f64, points: usize) -> String {
    let mut s = String::from("frame,t");
    for k in 0..points {
        s += &format!(",x{k},y{k}");
    }
    s.push('\n');
    for i in 0..frames {
        s += &format!("{i},{}", i as f64 * dt);
        for k in 0..points {
            s += &format!(",{},{}", k as f64, (k + i) as f64);
        }
        s.push('\n');
    }
    s
}

#[test]
fn landmarks_fps_inferred() {
    let seq = read_landmarks_csv(&landmark_text(25, 1.0 / 24.0, 68), &LipIndexMap::default(), None).unwrap();
    assert!((seq.fps() - 24.0).abs() < 1e-9);
    assert_eq!(seq.point_count(), 68);
    let fixed = read_landmarks_csv(&landmark_text(25, 1.0 / 24.0, 68), &LipIndexMap::default(), Some(30.0)).unwrap();
    assert_eq!(fixed.fps(), 30.0);
    let back = read_landmarks_csv(&write_landmarks_csv(&seq).unwrap(), &LipIndexMap::default(), None).unwrap();
    assert_eq!(back, seq);
}

#[test]
fn landmarks_errors() {
    assert!(read_landmarks_csv(&landmark_text(1, 0.1, 68), &LipIndexMap::default(), None).is_err());
    let mut ragged = landmark_text(5, 0.1, 68);
    ragged = ragged.replacen("\n3,", "\n3,0.3,1\nX,", 1);
    let ragged: String = ragged.lines().filter(|l| !l.starts_with('X')).collect::<Vec<_>>().join("\n");
    match read_landmarks_csv(&ragged, &LipIndexMap::default(), None) {
        Err(Error::Parse { line, msg }) => {
            assert_eq!(line, 5);
            assert!(msg.contains("ragged"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
    let backwards = landmark_text(4, 0.1, 68).replace("\n2,0.2", "\n2,0.05");
    assert!(matches!(
        read_landmarks_csv(&backwards, &LipIndexMap::default(), None),
        Err(Error::Parse { line: 4, .. })
    ));
}

fn model() -> VganModel {
    VganModel::init(VganConfig::default(), TargetKind::Total, 5).unwrap()
}

#[test]
fn model_roundtrip_predicts_identically() {
    let mut m = model();
    m.standardization.papi_mean[3] = 0.1 + 0.2;
    m.standardization.target_mean = 80.3;
    m.standardization.target_std = 1.0 / 3.0;
    let back = deserialize_model(&serialize_model(&m)).unwrap();
    assert_eq!(back, m);
    let papi = Matrix::from_fn(6, 20, |i, j| (i * 20 + j) as f64 * 0.37 - 3.0);
    let lip = Matrix::from_fn(6, 10, |i, j| (i + 2 * j) as f64 * 0.11);
    let a = m.predict(&papi, Some(&lip)).unwrap();
    let b = back.predict(&papi, Some(&lip)).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn model_load_errors() {
    let text = serialize_model(&model());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();

    let mut tampered = v.clone();
    tampered["params"]["final.w"]["shape"] = serde_json::json!([32, 320]);
    match deserialize_model(&tampered.to_string()) {
        Err(Error::Load(m)) => assert!(m.contains("final.w"), "{m}"),
        other => panic!("{other:?}"),
    }
    let mut short = v.clone();
    short["params"]["out.b"]["data"] = serde_json::json!([]);
    assert!(matches!(deserialize_model(&short.to_string()), Err(Error::Load(_))));

    let mut version = v;
    version["version"] = serde_json::json!(7);
    match deserialize_model(&version.to_string()) {
        Err(Error::Load(m)) => assert!(m.contains("supported versions: [1]"), "{m}"),
        other => panic!("{other:?}"),
    }
}
