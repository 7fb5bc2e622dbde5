use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use icuae_core::data::records::{write_event_row, write_events_header};
use icuae_core::data::{
    container_sha256, for_each_patient, prepare_cohort, read_stays, write_stays, FeatureSchema,
    GeneratorParams, HashingReader, PrepareOptions, SourceHashes, StayMeta,
};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::output::{create_dir, write_manifest, StampedCsv};
use crate::{GenerateArgs, PrepareArgs};

pub const EVENTS_FILE: &str = "events.csv";
pub const STAYS_FILE: &str = "stays.csv";
pub const SCHEMA_FILE: &str = "schema.txt";

#[derive(Serialize)]
struct GenerateManifest<'a> {
    command: &'static str,
    patients: usize,
    seed: u64,
    generator: &'a GeneratorParams,
    schema_sha256: String,
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let mut patients = args.patients;
    let mut seed = args.seed;
    if let Some(path) = &args.config {
        let cfg = ConfigFile::load(path)?;
        cfg.check_keys(&["patients", "seed"])?;
        cfg.apply("patients", &mut patients)?;
        cfg.apply("seed", &mut seed)?;
    }
    if patients == 0 {
        return Err(CliError::Usage("--patients must be at least 1".into()));
    }
    let params = GeneratorParams::default();
    let schema = FeatureSchema::default();
    create_dir(&args.out)?;
    let hash = write_manifest(
        &args.out.join("manifest.json"),
        &GenerateManifest {
            command: "generate",
            patients,
            seed,
            generator: &params,
            schema_sha256: schema.sha256(),
        },
    )?;
    schema.save(&args.out.join(SCHEMA_FILE))?;

    let events_path = args.out.join(EVENTS_FILE);
    let mut events = StampedCsv::create(&events_path, &hash)?;
    let w = events.writer();
    write_events_header(w).map_err(|e| CliError::io(&events_path, e))?;
    let mut events_written = 0usize;
    let mut stays: Vec<StayMeta> = Vec::with_capacity(patients);
    for_each_patient(patients, seed, &params, |meta, evs| {
        for e in &evs {
            write_event_row(w, e).map_err(|source| icuae_core::Error::Io {
                path: events_path.clone(),
                source,
            })?;
        }
        events_written += evs.len();
        stays.push(meta);
        Ok(())
    })?;
    events.finish()?;

    let stays_path = args.out.join(STAYS_FILE);
    let mut stays_csv = StampedCsv::create(&stays_path, &hash)?;
    write_stays(stays_csv.writer(), &stays).map_err(|e| CliError::io(&stays_path, e))?;
    stays_csv.finish()?;

    println!(
        "wrote {patients} stays and {events_written} events to {}",
        args.out.display()
    );
    println!("manifest_sha256={hash}");
    Ok(())
}

fn open(path: &Path) -> Result<HashingReader<BufReader<File>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(HashingReader::new(BufReader::with_capacity(1 << 20, file)))
}

pub fn prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let mut interval = args.interval;
    let mut options = PrepareOptions {
        seed: args.seed,
        care_unit: args.care_unit,
        imputation: args.imputation,
        ..PrepareOptions::default()
    };
    if let Some(path) = &args.config {
        let cfg = ConfigFile::load(path)?;
        cfg.check_keys(&["interval", "seed", "care_unit", "imputation"])?;
        cfg.apply("interval", &mut interval)?;
        cfg.apply("seed", &mut options.seed)?;
        cfg.apply_opt("care_unit", &mut options.care_unit)?;
        cfg.apply("imputation", &mut options.imputation)?;
    }
    if interval == 0 {
        return Err(CliError::Usage("--interval must be at least 1 hour".into()));
    }
    options.keep_hours = interval;

    let schema_path = args.raw.join(SCHEMA_FILE);
    let schema = if schema_path.exists() {
        FeatureSchema::load(&schema_path)?
    } else {
        FeatureSchema::default()
    };

    let events_path = args.raw.join(EVENTS_FILE);
    let mut reader = open(&events_path)?;
    let mut events = Vec::new();
    icuae_core::data::records::read_events_with(&mut reader, &events_path, |e| events.push(e))?;
    let events_sha256 = reader.finish();

    let stays_path = args.raw.join(STAYS_FILE);
    let mut reader = open(&stays_path)?;
    let stays = read_stays(&mut reader, &stays_path)?;
    let stays_sha256 = reader.finish();

    let cohort = prepare_cohort(&stays, events, &options)?;
    let mut dataset = cohort.dataset(interval, &schema)?;
    dataset.manifest.source = Some(SourceHashes {
        events_sha256,
        stays_sha256,
    });
    let hash = dataset.write(&args.out)?;

    print!("{}", cohort.summary.render());
    println!(
        "interval: {interval} h, flat width {}, imputation {}",
        dataset.manifest.flat_width, options.imputation
    );
    println!("manifest_sha256={hash}");
    println!("container_sha256={}", container_sha256(&args.out)?);
    Ok(())
}
