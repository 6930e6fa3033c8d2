#![no_main]

use libfuzzer_sys::fuzz_target;
use sobosvd_cli::samples::{decode_samples, encode_samples, SampleMeta};

// Leading bytes pick a small shape; the rest is the raw sample buffer.
fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else {
        return;
    };
    let d = 1 + head as usize % 3;
    if rest.len() < d {
        return;
    }
    let (dims, bytes) = rest.split_at(d);
    let meta = SampleMeta {
        shape: dims.iter().map(|&b| 3 + b as usize % 5).collect(),
        domain: vec![[0.0, 1.0]; d],
    };
    let expected = meta.expected_bytes().unwrap();
    let finite = bytes
        .chunks_exact(8)
        .all(|c| f64::from_le_bytes(c.try_into().unwrap()).is_finite());
    match decode_samples(bytes, &meta) {
        Ok(u) => {
            assert_eq!(bytes.len() as u64, expected);
            assert!(finite);
            assert_eq!(encode_samples(&u), bytes);
        }
        Err(_) => assert!(bytes.len() as u64 != expected || !finite),
    }
});
