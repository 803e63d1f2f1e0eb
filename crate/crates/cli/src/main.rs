//! Batch front end for the fingerprint discovery pipeline: database
//! generation, matching, ranking, synthetic-twin simulation, measurement
//! ingestion, and database inspection.

mod args;
mod commands;

use matprint_core::error::Error;

const USAGE: &str = "\
usage: matprint <subcommand> [flags]

subcommands:
  generate   run the catalog sweep and write the fingerprint database
  match      discover the best-matching model for a fingerprint
  rank       write the full similarity ranking for a fingerprint
  simulate   solve one model and write forces + fingerprint
  ingest     build a fingerprint from measurement CSVs
  inspect    summarize a database file

flags:
  --db PATH            database file (match, rank, ingest, inspect)
  --out DIR            output directory
  --measure NAME       cosine | euclidean (default euclidean)
  --steps N            load steps: protocol n_t for generate/simulate,
                       truncation for match/rank/ingest
  --jobs N             worker threads for generate
  --models LIST        comma-separated model tokens for generate
  --edge-length MM     target mesh edge length (default 3.0)
  --thickness MM       specimen thickness: experimental thickness for
                       ingest force rescaling, protocol override for
                       generate/simulate
  --config PATH        key = value config file (flags override)
  --quick              quick profile: 10 steps, 7.5 mm mesh
  --fingerprint PATH   serialized fingerprint input (match, rank)
  --data DIR           raw measurement directory with stage{K}_rep{R}.csv
                       and forces_rep{R}.csv (match, rank, ingest)
  --model TOKEN        model for simulate
  --theta LIST         comma-separated homogeneity parameters (simulate)
  --alpha LIST         comma-separated exponents (simulate)
  --top N              ranking rows to keep (rank)
  --tol-abs X          newton absolute tolerance override
  --tol-rel X          newton relative tolerance override

exit codes: 0 success, 2 protocol mismatch, 3 input error, 4 solver or
mesh failure, 1 other errors
";

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ProtocolMismatch { .. } => 2,
        Error::Schema { .. }
        | Error::Parse { .. }
        | Error::Argument(_)
        | Error::Descriptor(_)
        | Error::Layout(_)
        | Error::Parameter(_)
        | Error::Domain(_)
        | Error::Dropout(_)
        | Error::Extrapolation(_)
        | Error::DegenerateFingerprint(_)
        | Error::EmptyCandidates => 3,
        Error::Mesh(_) | Error::Numeric(_) | Error::InvalidKinematics(_) => 4,
        Error::Io(_) => 1,
    }
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some((sub, rest)) = argv.split_first() else {
        eprint!("{USAGE}");
        std::process::exit(1);
    };
    let run = || -> matprint_core::error::Result<()> {
        let cfg = args::RawConfig::parse(rest)?;
        match sub.as_str() {
            "generate" => commands::cmd_generate(&cfg),
            "match" => commands::cmd_match(&cfg),
            "rank" => commands::cmd_rank(&cfg),
            "simulate" => commands::cmd_simulate(&cfg),
            "ingest" => commands::cmd_ingest(&cfg),
            "inspect" => commands::cmd_inspect(&cfg),
            other => Err(Error::Argument(format!(
                "unknown subcommand '{other}'; see --help"
            ))),
        }
    };
    if sub == "--help" || sub == "help" {
        print!("{USAGE}");
        return;
    }
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
