#![no_main]

use libfuzzer_sys::fuzz_target;
use sobosvd_cli::config::{ExperimentConfig, FunctionSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(text) else {
        return;
    };
    let shape = match &cfg.function {
        FunctionSpec::Case(c) => match cfg.case_shape(c) {
            Ok(s) => s,
            Err(_) => return,
        },
        FunctionSpec::File(_) => cfg.grid.as_ref().map_or(vec![5, 5], |g| g.n.clone()),
    };
    if let Ok(ranks) = cfg.validate(&shape) {
        assert!(!ranks.is_empty());
        for r in &ranks {
            assert_eq!(r.len(), shape.len());
            assert!(r.iter().zip(&shape).all(|(r, n)| r <= n));
        }
    }
});
