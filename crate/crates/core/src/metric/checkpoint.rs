//! Siamese checkpoints: a metadata block followed by the dense-net dumps.
//!
//! ```text
//! siamese v1
//! kappa 1.0
//! margin 5.0          (or `inf`)
//! distance euclidean
//! objective verification
//! trunk
//! <densenet>
//! verification_head present|none
//! [<densenet>]
//! head present|none
//! [<densenet>]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::model::{SiameseConfig, SiameseModel};
use crate::error::{Error, Result};
use crate::nn::checkpoint::{read_net, write_net, Lines};
use crate::nn::DenseNet;

const MAGIC: &str = "siamese v1";

pub fn model_to_string(model: &SiameseModel) -> String {
    let c = model.config;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "kappa {:?}", c.kappa);
    match c.margin {
        Some(m) => {
            let _ = writeln!(s, "margin {m:?}");
        }
        None => s.push_str("margin inf\n"),
    }
    let _ = writeln!(s, "distance {}", c.distance);
    let _ = writeln!(s, "objective {}", c.objective);
    s.push_str("trunk\n");
    write_net(&mut s, &model.trunk);
    for (key, net) in [("verification_head", &model.verification_head), ("head", &model.head)] {
        match net {
            Some(n) => {
                let _ = writeln!(s, "{key} present");
                write_net(&mut s, n);
            }
            None => {
                let _ = writeln!(s, "{key} none");
            }
        }
    }
    s
}

fn read_model(lines: &mut Lines<'_>) -> Result<SiameseModel> {
    if lines.next_line()? != MAGIC {
        return Err(lines.error(format!("expected `{MAGIC}` header")));
    }
    let kappa: f64 = lines
        .keyed("kappa")?
        .trim()
        .parse()
        .map_err(|_| lines.error("bad kappa"))?;
    let margin = match lines.keyed("margin")?.trim() {
        "inf" => None,
        m => Some(m.parse::<f64>().map_err(|_| lines.error("bad margin"))?),
    };
    let distance = lines
        .keyed("distance")?
        .trim()
        .parse()
        .map_err(|e: Error| lines.error(e.to_string()))?;
    let objective = lines
        .keyed("objective")?
        .trim()
        .parse()
        .map_err(|e: Error| lines.error(e.to_string()))?;
    lines.keyed("trunk")?;
    let trunk = read_net(lines)?;
    let mut optional = |key: &str| -> Result<Option<DenseNet>> {
        match lines.keyed(key)?.trim() {
            "present" => Ok(Some(read_net(lines)?)),
            "none" => Ok(None),
            _ => Err(lines.error(format!("`{key}` must be `present` or `none`"))),
        }
    };
    let verification_head = optional("verification_head")?;
    let head = optional("head")?;
    let config = SiameseConfig {
        kappa,
        margin,
        distance,
        objective,
    };
    SiameseModel::from_parts(trunk, verification_head, head, config).map_err(|e| lines.error(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<SiameseModel> {
    read_model(&mut Lines::new(Path::new("<memory>"), text))
}

pub fn save_model(path: &Path, model: &SiameseModel) -> Result<()> {
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SiameseModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut Lines::new(path, &text))
}
