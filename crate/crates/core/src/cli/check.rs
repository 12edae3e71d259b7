use anyhow::anyhow;

use sketchreward::constraint::{is_satisfied, margin, parse_constraints, Atom};
use sketchreward::dsl::parse_sketch;

use super::{read, CheckArgs, CliError, CliResult, LoadedEnv, ResultExt};

fn fmt_atom(a: &Atom) -> String {
    let mut terms: Vec<(bool, String)> = a
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| {
            let mag = c.abs();
            let coef = if mag == 1.0 {
                String::new()
            } else {
                format!("{mag}*")
            };
            (*c < 0.0, format!("{coef}?{}", i + 1))
        })
        .collect();
    if a.offset != 0.0 || terms.is_empty() {
        terms.push((a.offset < 0.0, a.offset.abs().to_string()));
    }
    let mut out = String::new();
    for (i, (neg, t)) in terms.iter().enumerate() {
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(t);
    }
    format!("{out} <= 0")
}

pub fn run(args: &CheckArgs) -> CliResult<()> {
    let env = LoadedEnv::load(args.env.as_deref())?;
    let vocab = env.as_env().vocabulary().clone();
    let src = read(&args.sketch)?;
    let sketch =
        parse_sketch(&src, vocab.clone()).user_ctx(|| args.sketch.display().to_string())?;
    let holes = sketch.holes();
    let names: Vec<String> = holes.iter().map(|h| format!("?{h}")).collect();
    println!("holes: {}", names.join(" "));
    let tokens: Vec<&str> = sketch
        .referenced_tokens()
        .into_iter()
        .map(|t| vocab.name(t))
        .collect();
    println!("tokens: {}", tokens.join(" "));

    let mut n_preds = 0;
    if let Some(path) = &args.constraint {
        let file = parse_constraints(&read(path)?).user_ctx(|| path.display().to_string())?;
        file.link(sketch.n_holes())
            .user_ctx(|| path.display().to_string())?;
        for (i, p) in file.predicates.iter().enumerate() {
            let label = p.label.clone().unwrap_or_else(|| format!("#{}", i + 1));
            let atoms: Vec<String> = p.atoms.iter().map(fmt_atom).collect();
            println!("{label}: {}", atoms.join(" && "));
        }
        n_preds = file.n_predicates();
        if let Some(h) = &args.holes {
            if h.len() != sketch.n_holes() {
                return Err(CliError::User(anyhow!(
                    "{} hole values given for a sketch with {} holes",
                    h.len(),
                    sketch.n_holes()
                )));
            }
            let failed: Vec<String> = file
                .predicates
                .iter()
                .enumerate()
                .filter(|(_, p)| !is_satisfied(&p.to_constraint(), h))
                .map(|(i, p)| p.label.clone().unwrap_or_else(|| format!("#{}", i + 1)))
                .collect();
            let linked = file.link(sketch.n_holes()).user()?;
            println!("margin at holes: {}", margin(&linked, h).user()?);
            if !failed.is_empty() {
                return Err(CliError::User(anyhow!(
                    "holes violate {}",
                    failed.join(", ")
                )));
            }
        }
    } else if args.holes.is_some() {
        return Err(CliError::User(anyhow!("--holes needs --constraint")));
    }
    if args.constraint.is_some() {
        println!("{} holes, {n_preds} predicates, OK", holes.len());
    } else {
        println!("{} holes, OK", holes.len());
    }
    Ok(())
}
