//! Run every command of the batch front-end on the bundled job file.

use focklab::cli::{cmd_certify, cmd_classify, cmd_compare, cmd_norms, cmd_path, Job, Overrides};

fn main() -> focklab::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/job.json");
    let job = Job::from_path(path.as_ref(), &Overrides { grid: Some(5), ..Overrides::default() })?;
    println!("{}", cmd_classify(&job)?);
    println!("{}", cmd_compare(&job, "left", "right")?);
    println!("{}", cmd_certify(&job, "weighted", "compact")?);
    println!("{}", cmd_norms(&job, "mixed")?);
    println!("{}", cmd_path(&job, "half", "shifted")?);
    Ok(())
}
