use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use stampede_core::geo::GeoOrigin;
use stampede_core::Vec2;

use crate::output;

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Origin latitude, degrees.
    #[arg(long, allow_hyphen_values = true)]
    lat0: f64,
    /// Origin longitude, degrees.
    #[arg(long, allow_hyphen_values = true)]
    lon0: f64,
    /// Venue x-axis direction, radians counter-clockwise from east.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rotation: f64,
    /// Map `x,y[,vx,vy]` back to `lat,lon[,speed,heading]`.
    #[arg(long)]
    inverse: bool,
    /// Input CSV; stdin if omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Column layout of one direction of the conversion.
struct Columns {
    pos: [&'static str; 2],
    vel: [&'static str; 2],
    out_pos: [&'static str; 2],
    out_vel: [&'static str; 2],
}

const FORWARD: Columns = Columns {
    pos: ["lat", "lon"],
    vel: ["speed", "heading"],
    out_pos: ["x", "y"],
    out_vel: ["vx", "vy"],
};

const INVERSE: Columns = Columns {
    pos: ["x", "y"],
    vel: ["vx", "vy"],
    out_pos: ["lat", "lon"],
    out_vel: ["speed", "heading"],
};

pub fn run(args: ConvertArgs) -> Result<ExitCode> {
    let origin = GeoOrigin::new(args.lat0, args.lon0, args.rotation)?;
    let text = match &args.input {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    let cols = if args.inverse { &INVERSE } else { &FORWARD };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let pos = [find(cols.pos[0]), find(cols.pos[1])];
    let [Some(pa), Some(pb)] = pos else {
        bail!("input needs `{}` and `{}` columns", cols.pos[0], cols.pos[1]);
    };
    let vel = match (find(cols.vel[0]), find(cols.vel[1])) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => bail!("`{}` and `{}` must appear together", cols.vel[0], cols.vel[1]),
    };
    let consumed: Vec<usize> = [Some(pa), Some(pb), vel.map(|v| v.0), vel.map(|v| v.1)]
        .into_iter()
        .flatten()
        .collect();
    let passthrough: Vec<usize> = (0..header.len()).filter(|i| !consumed.contains(i)).collect();

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut out_header: Vec<&str> = passthrough.iter().map(|&i| &header[i]).collect();
    out_header.extend(cols.out_pos);
    if vel.is_some() {
        out_header.extend(cols.out_vel);
    }
    w.write_record(&out_header)?;

    let (mut rows, mut bad) = (0usize, 0usize);
    for (i, rec) in reader.records().enumerate() {
        rows += 1;
        // header is line 1
        let line = i + 2;
        let converted = rec.map_err(anyhow::Error::from).and_then(|rec| {
            let num = |j: usize| -> Result<f64> {
                let field = rec.get(j).unwrap_or("");
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| anyhow!("`{}` is not a finite number: `{field}`", &header[j]))
            };
            let (a, b) = (num(pa)?, num(pb)?);
            let mut out: Vec<String> = passthrough
                .iter()
                .map(|&j| rec.get(j).unwrap_or("").to_string())
                .collect();
            let (u, v) = if args.inverse {
                origin.to_global(Vec2::new(a, b))
            } else {
                let p = origin.to_local(a, b)?;
                (p.x, p.y)
            };
            out.extend([u.to_string(), v.to_string()]);
            if let Some((ia, ib)) = vel {
                let (c, d) = (num(ia)?, num(ib)?);
                let (u, v) = if args.inverse {
                    velocity_to_global(&origin, Vec2::new(c, d))
                } else {
                    let q = origin.velocity_to_local(c, d)?;
                    // avoid printing `-0` for a stationary fix
                    (q.x + 0.0, q.y + 0.0)
                };
                out.extend([u.to_string(), v.to_string()]);
            }
            Ok(out)
        });
        match converted {
            Ok(out) => w.write_record(&out)?,
            Err(e) => {
                bad += 1;
                eprintln!("warning: line {line} skipped: {e:#}");
            }
        }
    }
    w.flush()?;
    if rows > 0 && bad == rows {
        bail!("no row could be converted");
    }
    Ok(ExitCode::SUCCESS)
}

/// `(speed, heading)` of a venue-frame velocity; heading is radians
/// counter-clockwise from east in (-pi, pi].
fn velocity_to_global(origin: &GeoOrigin, v: Vec2) -> (f64, f64) {
    let en = v.rotate(origin.rotation);
    (en.length(), en.y.atan2(en.x))
}
