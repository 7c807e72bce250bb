use std::path::{Path, PathBuf};

use resflow::io::idx::{load_idx, parse_images, parse_labels};
use resflow::io::IoError;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn load(classes: &[u8], limit: usize) -> Result<Vec<resflow::train::Sample>, IoError> {
    load_idx(&fixture("tiny-images.idx3"), &fixture("tiny-labels.idx1"), classes, limit)
}

#[test]
fn header_and_pixels() {
    let images = parse_images(&std::fs::read(fixture("tiny-images.idx3")).unwrap()).unwrap();
    assert_eq!((images.rows, images.cols), (2, 3));
    assert_eq!(images.pixels[0], vec![0, 255, 128, 64, 0, 0]);
    assert_eq!(images.pixels[3], vec![0, 0, 0, 0, 0, 51]);
    assert_eq!(parse_labels(&std::fs::read(fixture("tiny-labels.idx1")).unwrap()).unwrap(), vec![1, 0, 2, 1]);
}

#[test]
fn samples_match_golden_vectors() {
    let golden: [(&[f64], &[f64]); 4] = [
        (&[0.0, 0.872056100928757, 0.4377379643877682, 0.2188689821938841, 0.0, 0.0], &[0.0, 1.0, 0.0]),
        (
            &[0.0392156862745098, 0.0784313725490196, 0.11764705882352941, 0.1568627450980392, 0.19607843137254902, 0.23529411764705882],
            &[1.0, 0.0, 0.0],
        ),
        (&[0.4082482904638631; 6], &[0.0, 0.0, 1.0]),
        (&[0.0, 0.0, 0.0, 0.0, 0.0, 0.2], &[0.0, 1.0, 0.0]),
    ];
    let samples = load(&[0, 1, 2], 10).unwrap();
    assert_eq!(samples.len(), 4);
    for (s, (d, g)) in samples.iter().zip(golden) {
        assert_eq!(s.d.as_slice(), d);
        assert_eq!(s.g.as_slice(), g);
    }
}

#[test]
fn class_filter_and_limit() {
    let samples = load(&[1, 0], 1).unwrap();
    assert_eq!(samples.len(), 2);
    assert_eq!(samples[0].g.as_slice(), &[1.0, 0.0]);
    assert_eq!(samples[1].g.as_slice(), &[0.0, 1.0]);
    assert!(load(&[0, 1], 0).unwrap().is_empty());
    assert!(matches!(load(&[7], 5), Err(IoError::Idx(_))));
}

#[test]
fn missing_file_names_the_path() {
    let err = load_idx(&fixture("absent.idx3"), &fixture("tiny-labels.idx1"), &[0], 1).unwrap_err();
    assert!(err.to_string().contains("absent.idx3"), "{err}");
}
