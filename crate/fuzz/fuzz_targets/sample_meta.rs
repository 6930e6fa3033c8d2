#![no_main]

use libfuzzer_sys::fuzz_target;
use sobosvd_cli::samples::SampleMeta;

fuzz_target!(|data: &[u8]| {
    if let Ok(meta) = SampleMeta::from_json(data) {
        assert!(meta.validate().is_ok());
        assert!(meta.expected_bytes().unwrap() >= 8 * 3);
        let text = serde_json::to_vec(&meta).unwrap();
        assert_eq!(SampleMeta::from_json(&text).unwrap(), meta);
    }
});
