use std::fs;
use std::path::{Path, PathBuf};

use udi_core::classify::{
    average_composite, extract_signatures, knn_classify, reclassify_percent, ImperviousMap,
    KnnConfig, MapKind, SignatureTable,
};
use udi_core::forecast::{
    compute_shortfalls, decompose, fit, read_models_csv, read_shortfalls_csv, write_models_csv,
    write_shortfalls_csv,
};
use udi_core::impact::{
    accuracy, compute_impacts, mad_lookup, read_impact_csv, read_sample_csv, stratified_sample,
    write_confusion_csv, write_impact_csv, write_sample_csv,
};
use udi_core::io;
use udi_core::month::{MonthKey, MonthRange};
use udi_core::raster::{combine, mean_stack, resample_nearest, CombineMode, MultibandRaster, Raster};
use udi_core::synth::{generate, ScenarioConfig};
use udi_core::zonal::{rasterize_tracts, read_zonal_csv, series_from_records, write_zonal_csv, zonal_stats};
use udi_core::{Error, Result};

use crate::{ChangeArg, Command, CompositeKind};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { config, output } => synth(&config, &output),
        Command::Reclass { input, output } => reclass(&input, &output),
        Command::Signatures { reference, images, output } => signatures(&reference, &images, &output),
        Command::Classify { signatures, image, k, output } => classify(&signatures, &image, k, &output),
        Command::Composite { inputs, kind, output } => composite(&inputs, kind, &output),
        Command::Udi { impervious, radiance, observations, output } => {
            udi(&impervious, &radiance, &observations, &output)
        }
        Command::Change { current, baseline, mode, output } => change(&current, &baseline, mode, &output),
        Command::Zonal { tracts, impervious, data, start, end, output } => {
            zonal(&tracts, &impervious, &data, start, end, &output)
        }
        Command::Forecast {
            zonal,
            train_start,
            train_end,
            forecast_start,
            forecast_end,
            models,
            shortfalls,
        } => forecast(
            &zonal,
            MonthRange::new(train_start, train_end)?,
            MonthRange::new(forecast_start, forecast_end)?,
            &models,
            &shortfalls,
        ),
        Command::Impact { shortfalls, models, tracts, train_start, train_end, output } => {
            impact(&shortfalls, &models, &tracts, MonthRange::new(train_start, train_end)?, &output)
        }
        Command::Sample { map, size, seed, output } => sample(&map, size, seed, &output),
        Command::Accuracy { sample, output } => score(&sample, &output),
        Command::Report { tract, zonal, models, impact, train_start, train_end, output } => report(
            tract.as_deref(),
            zonal.as_deref(),
            models.as_deref(),
            impact.as_deref(),
            MonthRange::new(train_start, train_end)?,
            &output,
        ),
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn synth(config: &Path, output: &Path) -> Result<()> {
    let text = fs::read_to_string(config).map_err(|e| Error::io(config, e))?;
    let cfg = ScenarioConfig::from_str_checked(&text)?;
    generate(&cfg, output)?;
    println!(
        "wrote {} ({} tracts, {} months, seed {})",
        output.display(),
        cfg.tract_count(),
        cfg.months.len(),
        cfg.seed
    );
    Ok(())
}

fn reclass(input: &Path, output: &Path) -> Result<()> {
    let percent: Raster<f64> = io::read_raster(input)?;
    let map = reclassify_percent(&percent)?;
    io::write_raster(map.raster(), output)?;
    wrote(output);
    Ok(())
}

fn signatures(reference: &Path, images: &[PathBuf], output: &Path) -> Result<()> {
    let map = ImperviousMap::from_raster(io::read_raster(reference)?, MapKind::PerImage)?;
    let images = read_images(images)?;
    let table = extract_signatures(&map, &images)?;
    table.write_csv(output)?;
    wrote(output);
    Ok(())
}

fn read_images(stems: &[PathBuf]) -> Result<Vec<MultibandRaster<f64>>> {
    stems.iter().map(|stem| io::read_multiband(stem)).collect()
}

fn classify(signatures: &Path, image: &Path, k: usize, output: &Path) -> Result<()> {
    let table = SignatureTable::<f64>::read_csv(signatures)?;
    let image = io::read_multiband(image)?;
    let config = KnnConfig { k, ..KnnConfig::default() };
    let map = knn_classify(&image, &table, &config)?;
    io::write_raster(map.raster(), output)?;
    wrote(output);
    Ok(())
}

fn composite(inputs: &[PathBuf], kind: CompositeKind, output: &Path) -> Result<()> {
    let out = match kind {
        CompositeKind::Impervious => {
            let maps = inputs
                .iter()
                .map(|p| ImperviousMap::from_raster(io::read_raster(p)?, MapKind::PerImage))
                .collect::<Result<Vec<_>>>()?;
            average_composite(&maps)?.into_raster()
        }
        CompositeKind::Udi => {
            let rasters = inputs
                .iter()
                .map(|p| io::read_raster::<f64>(p))
                .collect::<Result<Vec<_>>>()?;
            mean_stack(&rasters)?
        }
    };
    io::write_raster(&out, output)?;
    wrote(output);
    Ok(())
}

fn udi(impervious: &Path, radiance: &Path, observations: &Path, output: &Path) -> Result<()> {
    let map = ImperviousMap::<f64>::from_raster(io::read_raster(impervious)?, MapKind::Composite)?;
    let radiance: Raster<f64> = io::read_raster(radiance)?;
    let observations: Raster<f64> = io::read_raster(observations)?;
    let masked = io::apply_observation_mask(&radiance, &observations)?;
    let upsampled = resample_nearest(&masked, map.raster().geometry())?;
    let index = combine(map.raster(), &upsampled, CombineMode::Multiply)?;
    io::write_raster(&index, output)?;
    wrote(output);
    Ok(())
}

fn change(current: &Path, baseline: &Path, mode: ChangeArg, output: &Path) -> Result<()> {
    let current: Raster<f64> = io::read_raster(current)?;
    let baseline: Raster<f64> = io::read_raster(baseline)?;
    let mode = match mode {
        ChangeArg::Subtract => CombineMode::Subtract,
        ChangeArg::PercentChange => CombineMode::PercentChange,
    };
    let out = combine(&current, &baseline, mode)?;
    io::write_raster(&out, output)?;
    wrote(output);
    Ok(())
}

fn zonal(
    tracts: &Path,
    impervious: &Path,
    data: &Path,
    start: MonthKey,
    end: MonthKey,
    output: &Path,
) -> Result<()> {
    let months = MonthRange::new(start, end)?;
    let map = ImperviousMap::<f64>::from_raster(io::read_raster(impervious)?, MapKind::Composite)?;
    let collection = io::read_tracts(tracts)?;
    let footprints = rasterize_tracts(&collection, map.raster().geometry());
    let mut records = Vec::with_capacity(months.len() * footprints.len());
    for month in months.iter() {
        let pair = io::read_viirs_pair::<f64>(
            month,
            &data.join(io::radiance_name(month)),
            &data.join(io::observations_name(month)),
        )?;
        let upsampled = resample_nearest(&pair.radiance, map.raster().geometry())?;
        let index = combine(map.raster(), &upsampled, CombineMode::Multiply)?;
        for fp in &footprints {
            records.push(zonal_stats(&index, fp, month)?);
        }
    }
    write_zonal_csv(&records, output)?;
    wrote(output);
    Ok(())
}

fn forecast(
    zonal: &Path,
    training: MonthRange,
    window: MonthRange,
    models_path: &Path,
    shortfalls_path: &Path,
) -> Result<()> {
    let records = read_zonal_csv(zonal)?;
    let series = series_from_records(&records)?;
    let mut models = Vec::with_capacity(series.len());
    let mut shortfalls = Vec::new();
    for s in &series {
        let model = fit(&decompose(s, training)?)?;
        shortfalls.extend(compute_shortfalls(&model, s, window)?);
        models.push(model);
    }
    write_models_csv(&models, models_path)?;
    wrote(models_path);
    write_shortfalls_csv(&shortfalls, shortfalls_path)?;
    wrote(shortfalls_path);
    Ok(())
}

fn impact(
    shortfalls: &Path,
    models: &Path,
    tracts: &Path,
    training: MonthRange,
    output: &Path,
) -> Result<()> {
    let records = read_shortfalls_csv(shortfalls)?;
    let models = read_models_csv(models, training)?;
    let collection = io::read_tracts(tracts)?;
    let summaries = compute_impacts(&records, &mad_lookup(&models), &collection)?;
    write_impact_csv(&summaries, output)?;
    wrote(output);
    Ok(())
}

fn sample(map: &Path, size: usize, seed: u64, output: &Path) -> Result<()> {
    let map = ImperviousMap::<f64>::from_raster(io::read_raster(map)?, MapKind::Composite)?;
    let drawn = stratified_sample(&map, size, seed)?;
    write_sample_csv(&drawn.points, output)?;
    wrote(output);
    Ok(())
}

fn score(sample: &Path, output: &Path) -> Result<()> {
    let points = read_sample_csv(sample)?;
    let report = accuracy(&points)?;
    write_confusion_csv(&report, output)?;
    wrote(output);
    println!("total {}", report.total);
    println!("correct {}", report.correct);
    println!("overall_accuracy {}", report.overall);
    Ok(())
}

fn report(
    tract: Option<&str>,
    zonal: Option<&Path>,
    models: Option<&Path>,
    impact: Option<&Path>,
    training: MonthRange,
    output: &Path,
) -> Result<()> {
    let svg = match (tract, impact) {
        (Some(tract_id), None) => {
            // clap enforces presence of both paths alongside --tract.
            let records = read_zonal_csv(zonal.expect("clap requires --zonal"))?;
            let all_models = read_models_csv(models.expect("clap requires --models"), training)?;
            let mut mine: Vec<_> = records.into_iter().filter(|r| r.tract_id == tract_id).collect();
            if mine.is_empty() {
                return Err(Error::UnknownTract {
                    tract_id: tract_id.to_string(),
                    detail: "no rows in the zonal table".to_string(),
                });
            }
            mine.sort_by_key(|r| r.month);
            let model = all_models
                .iter()
                .find(|m| m.tract_id == tract_id)
                .ok_or_else(|| Error::UnknownTract {
                    tract_id: tract_id.to_string(),
                    detail: "no fitted model".to_string(),
                })?;
            crate::svg::tract_chart(tract_id, &mine, model)
        }
        (None, Some(impact_path)) => {
            let summaries = read_impact_csv(impact_path)?;
            if summaries.is_empty() {
                return Err(Error::EmptyInput {
                    what: "impact table has no rows".to_string(),
                });
            }
            crate::svg::island_chart(&summaries)
        }
        // clap's argument group guarantees exactly one source.
        _ => unreachable!("argument parsing enforces one of --tract/--impact"),
    };
    fs::write(output, svg).map_err(|e| Error::io(output, e))?;
    wrote(output);
    Ok(())
}
