//! Dataset serialization.
//!
//! Two interchangeable formats:
//!
//! - CSV, long format with header `auction_id,weight,buyer_id,bid` and one
//!   row per positive bid. The weight must repeat identically on every row
//!   of an auction. Buyer count is inferred as `max buyer_id + 1`.
//! - JSON, `{"n": ..., "auctions": [{"id", "weight", "bids": {"<buyer>": bid}}]}`,
//!   which can also express trailing zero-bid buyers and all-zero auctions.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::auction::{Auction, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown dataset format {other:?} (expected csv or json)"
            ))),
        }
    }
}

pub fn parse_dataset(source: impl Read, format: Format) -> Result<Dataset> {
    match format {
        Format::Csv => parse_csv(source),
        Format::Json => parse_json(source),
    }
}

pub fn write_dataset(ds: &Dataset, sink: impl Write, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(ds, sink),
        Format::Json => write_json(ds, sink),
    }
}

fn parse_csv(source: impl Read) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    {
        let headers = reader.headers()?;
        let expect = ["auction_id", "weight", "buyer_id", "bid"];
        if headers.iter().ne(expect) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {:?}, got {:?}", expect.join(","), headers),
            });
        }
    }

    // auction order follows first appearance
    let mut order: Vec<String> = Vec::new();
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    let mut bids: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
    let mut max_buyer: Option<u32> = None;

    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let field = |idx: usize, name: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {name}"),
            })
        };
        let id = field(0, "auction_id")?.to_string();
        let weight: f64 = field(1, "weight")?.parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad weight: {e}"),
        })?;
        let buyer: u32 = field(2, "buyer_id")?.parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad buyer_id: {e}"),
        })?;
        let bid: f64 = field(3, "bid")?.parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad bid: {e}"),
        })?;
        if !bid.is_finite() || bid < 0.0 {
            return Err(Error::Validation(format!(
                "line {line}: bid must be finite and non-negative, got {bid}"
            )));
        }
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::Validation(format!(
                "line {line}: weight must be positive, got {weight}"
            )));
        }
        match weights.get(&id) {
            None => {
                weights.insert(id.clone(), weight);
                order.push(id.clone());
            }
            Some(&w) if w == weight => {}
            Some(&w) => {
                return Err(Error::Validation(format!(
                    "line {line}: auction {id} listed with weights {w} and {weight}"
                )));
            }
        }
        bids.entry(id).or_default().push((buyer, bid));
        max_buyer = Some(max_buyer.map_or(buyer, |m| m.max(buyer)));
    }

    if order.is_empty() {
        return Err(Error::Validation("no auctions".into()));
    }
    let num_buyers = max_buyer.unwrap() + 1;
    let auctions = order
        .into_iter()
        .map(|id| {
            let weight = weights[&id];
            let auction_bids = bids.remove(&id).unwrap();
            Auction::new(id, weight, auction_bids)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(auctions, num_buyers)
}

fn write_csv(ds: &Dataset, sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["auction_id", "weight", "buyer_id", "bid"])?;
    for auction in ds.auctions() {
        for &(buyer, bid) in auction.bids() {
            if bid > 0.0 {
                writer.write_record([
                    auction.id().to_string(),
                    format!("{}", auction.weight()),
                    format!("{buyer}"),
                    format!("{bid}"),
                ])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonAuction {
    id: String,
    weight: f64,
    bids: BTreeMap<u32, f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    n: u32,
    auctions: Vec<JsonAuction>,
}

fn parse_json(source: impl Read) -> Result<Dataset> {
    let raw: JsonDataset = serde_json::from_reader(source)?;
    if raw.auctions.is_empty() {
        return Err(Error::Validation("no auctions".into()));
    }
    let auctions = raw
        .auctions
        .into_iter()
        .map(|a| Auction::new(a.id, a.weight, a.bids.into_iter().collect()))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(auctions, raw.n)
}

fn write_json(ds: &Dataset, mut sink: impl Write) -> Result<()> {
    let raw = JsonDataset {
        n: ds.num_buyers(),
        auctions: ds
            .auctions()
            .iter()
            .map(|a| JsonAuction {
                id: a.id().to_string(),
                weight: a.weight(),
                bids: a.bids().iter().copied().collect(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut sink, &raw)?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv() {
        let csv = "auction_id,weight,buyer_id,bid\na1,1.0,0,5\na1,1.0,1,3\n";
        let ds = parse_dataset(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(ds.auctions().len(), 1);
        assert_eq!(ds.num_buyers(), 2);
        assert_eq!(ds.auctions()[0].bid(0), 5.0);
        assert_eq!(ds.auctions()[0].bid(1), 3.0);
    }

    #[test]
    fn empty_csv_is_no_auctions() {
        let err = parse_dataset("auction_id,weight,buyer_id,bid\n".as_bytes(), Format::Csv)
            .unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.contains("no auctions")));
    }

    #[test]
    fn negative_bid_rejected() {
        let csv = "auction_id,weight,buyer_id,bid\na1,1.0,0,-1\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), Format::Csv),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "auction_id,weight,buyer_id,bid\na1,1.0,0,5\na1,1.0,x,3\n";
        match parse_dataset(csv.as_bytes(), Format::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_weight_rejected() {
        let csv = "auction_id,weight,buyer_id,bid\na1,1.0,0,5\na1,2.0,1,3\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), Format::Csv),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let csv = "auction_id,weight,buyer_id,bid\na1,1.5,0,5\na1,1.5,1,3\nb,2,0,0.25\n";
        let ds = parse_dataset(csv.as_bytes(), Format::Csv).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf, Format::Csv).unwrap();
        let again = parse_dataset(&buf[..], Format::Csv).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"n": 3, "auctions": [
            {"id": "a1", "weight": 1.0, "bids": {"0": 5.0, "1": 3.0}},
            {"id": "a2", "weight": 2.5, "bids": {"2": 0.5}}
        ]}"#;
        let ds = parse_dataset(json.as_bytes(), Format::Json).unwrap();
        assert_eq!(ds.num_buyers(), 3);
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf, Format::Json).unwrap();
        let again = parse_dataset(&buf[..], Format::Json).unwrap();
        assert_eq!(ds, again);
    }
}
