pub mod authorsim;
pub mod bench;
pub mod compute;
pub mod eval;
pub mod gen_sbm;

use anyhow::Result;
use serde::Serialize;

/// Run configuration as recorded in the manifest.
pub fn config_json<T: Serialize>(args: &T, workers: usize) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(args)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("workers".into(), workers.into());
    }
    Ok(v)
}
