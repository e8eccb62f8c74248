//! Transaction-log ingestion, preprocessing filters, and the customer-level
//! train/validation/test split.
//!
//! All dataset layouts are converted to one canonical form, the generic
//! transactions CSV (`customer,order_seq,item[,category]`), from which the
//! rest of the pipeline works. Two adapters cover the common public layouts:
//! an Instacart-style directory of `orders.csv` / `order_products.csv` /
//! `products.csv`, and a Ta-Feng-style flat file where one customer-day is
//! one basket.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::types::{Basket, ItemId, PurchaseHistory, Vocabulary};
use crate::{Error, Result};

/// One line item of a transaction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionRecord {
    pub customer: String,
    /// Position of the basket in the customer's timeline.
    pub order_seq: u64,
    pub item: String,
    pub category: Option<String>,
}

/// Supported source layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// The canonical CSV produced by `ingest`.
    Generic,
    /// Directory with `orders.csv`, `order_products.csv`, `products.csv`.
    Instacart,
    /// Flat file with transaction-date, customer and product columns.
    TaFeng,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Ok(DataFormat::Generic),
            "instacart" => Ok(DataFormat::Instacart),
            "tafeng" | "ta-feng" => Ok(DataFormat::TaFeng),
            other => Err(Error::InvalidConfig(format!(
                "unknown format {other:?}; expected generic | instacart | tafeng"
            ))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DataFormat::Generic => "generic",
            DataFormat::Instacart => "instacart",
            DataFormat::TaFeng => "tafeng",
        };
        f.write_str(name)
    }
}

/// Histories, the item vocabulary, and an optional item-category map.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub histories: Vec<PurchaseHistory>,
    pub vocab: Vocabulary,
    pub categories: BTreeMap<ItemId, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusStats {
    pub customers: usize,
    pub baskets: usize,
    pub products: usize,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "customers={} baskets={} products={}",
            self.customers, self.baskets, self.products
        )
    }
}

impl Corpus {
    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            customers: self.histories.len(),
            baskets: self.histories.iter().map(PurchaseHistory::len).sum(),
            products: self.vocab.len(),
        }
    }
}

/// Loads a transaction log and groups it into per-customer basket sequences.
///
/// With `aisle_level` set, the Instacart adapter replaces each product code
/// by its aisle/category code before interning.
pub fn load_transactions(path: &Path, format: DataFormat, aisle_level: bool) -> Result<Corpus> {
    let records = match format {
        DataFormat::Generic => read_generic(path)?,
        DataFormat::Instacart => read_instacart(path, aisle_level)?,
        DataFormat::TaFeng => read_tafeng(path)?,
    };
    records_to_corpus(records, &path.display().to_string())
}

/// Groups records into histories: customers in first-appearance order,
/// baskets by `order_seq`, duplicate `(customer, order_seq, item)` triples
/// collapsed. Out-of-order rows are merged into their basket with a warning.
pub fn records_to_corpus(records: Vec<TransactionRecord>, source: &str) -> Result<Corpus> {
    let mut customer_order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, BTreeMap<u64, Vec<String>>> = HashMap::new();
    let mut raw_categories: HashMap<String, String> = HashMap::new();
    let mut last_seq: HashMap<String, u64> = HashMap::new();
    let mut out_of_order = 0u64;

    for record in records {
        if let Some(category) = record.category {
            raw_categories.entry(record.item.clone()).or_insert(category);
        }
        let baskets = grouped.entry(record.customer.clone()).or_insert_with(|| {
            customer_order.push(record.customer.clone());
            BTreeMap::new()
        });
        match last_seq.get(&record.customer) {
            Some(&seen) if record.order_seq < seen => out_of_order += 1,
            _ => {
                last_seq.insert(record.customer.clone(), record.order_seq);
            }
        }
        baskets.entry(record.order_seq).or_default().push(record.item);
    }
    if out_of_order > 0 {
        log::warn!("{source}: merged {out_of_order} out-of-order rows into existing baskets");
    }

    let mut vocab = Vocabulary::new();
    let mut histories = Vec::with_capacity(customer_order.len());
    for customer in customer_order {
        let baskets = grouped
            .remove(&customer)
            .expect("grouped entry exists for every ordered customer")
            .into_values()
            .map(|items| {
                items
                    .iter()
                    .map(|code| vocab.intern_item(code))
                    .collect::<Result<Basket>>()
            })
            .collect::<Result<Vec<Basket>>>()?;
        histories.push(PurchaseHistory::new(customer, baskets));
    }

    let mut categories = BTreeMap::new();
    for (code, category) in raw_categories {
        if let Some(id) = vocab.get(&code) {
            categories.insert(id, category);
        }
    }
    vocab.freeze();
    Ok(Corpus {
        histories,
        vocab,
        categories,
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn column_index(headers: &csv::StringRecord, names: &[&str], path: &Path) -> Result<usize> {
    for (i, h) in headers.iter().enumerate() {
        if names.iter().any(|n| n.eq_ignore_ascii_case(h)) {
            return Ok(i);
        }
    }
    Err(Error::MissingColumn {
        path: path.display().to_string(),
        column: names[0].to_string(),
    })
}


fn read_generic(path: &Path) -> Result<Vec<TransactionRecord>> {
    let mut reader = open_csv(path)?;
    if reader.headers()?.is_empty() {
        return Ok(Vec::new());
    }
    let headers = reader.headers()?.clone();
    let customer = column_index(&headers, &["customer"], path)?;
    let order_seq = column_index(&headers, &["order_seq"], path)?;
    let item = column_index(&headers, &["item"], path)?;
    let category = column_index(&headers, &["category"], path).ok();

    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        if !reader.read_record(&mut row)? {
            break;
        }
        let field = |idx: usize| -> Result<&str> {
            row.get(idx).ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("row has only {} fields", row.len()),
            })
        };
        let seq: u64 = field(order_seq)?.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line,
            msg: format!("order_seq {:?} is not a non-negative integer", field(order_seq).unwrap_or("")),
        })?;
        records.push(TransactionRecord {
            customer: field(customer)?.to_string(),
            order_seq: seq,
            item: field(item)?.to_string(),
            category: category
                .and_then(|idx| row.get(idx))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        });
    }
    Ok(records)
}

fn read_instacart(dir: &Path, aisle_level: bool) -> Result<Vec<TransactionRecord>> {
    let orders_path = dir.join("orders.csv");
    let mut reader = open_csv(&orders_path)?;
    let headers = reader.headers()?.clone();
    let order_id = column_index(&headers, &["order_id"], &orders_path)?;
    let user_id = column_index(&headers, &["user_id"], &orders_path)?;
    let order_number = column_index(&headers, &["order_number"], &orders_path)?;

    // order_id -> (customer, sequence)
    let mut orders: HashMap<String, (String, u64)> = HashMap::new();
    let mut row = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        if !reader.read_record(&mut row)? {
            break;
        }
        let seq: u64 = row
            .get(order_number)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                path: orders_path.display().to_string(),
                line,
                msg: "order_number is not a non-negative integer".into(),
            })?;
        let oid = row.get(order_id).unwrap_or_default().to_string();
        let user = row.get(user_id).unwrap_or_default().to_string();
        orders.insert(oid, (user, seq));
    }

    // product_id -> aisle/category
    let products_path = dir.join("products.csv");
    let mut aisles: HashMap<String, String> = HashMap::new();
    if products_path.exists() {
        let mut reader = open_csv(&products_path)?;
        let headers = reader.headers()?.clone();
        let product_id = column_index(&headers, &["product_id"], &products_path)?;
        let aisle_id = column_index(&headers, &["aisle_id", "aisle"], &products_path)?;
        while reader.read_record(&mut row)? {
            let pid = row.get(product_id).unwrap_or_default().to_string();
            let aisle = row.get(aisle_id).unwrap_or_default().to_string();
            aisles.insert(pid, aisle);
        }
    } else if aisle_level {
        return Err(Error::MissingColumn {
            path: products_path.display().to_string(),
            column: "aisle_id (products.csv required for --aisle-level)".into(),
        });
    }

    let lines_path = dir.join("order_products.csv");
    let mut reader = open_csv(&lines_path)?;
    let headers = reader.headers()?.clone();
    let order_id_col = column_index(&headers, &["order_id"], &lines_path)?;
    let product_col = column_index(&headers, &["product_id"], &lines_path)?;

    let mut records = Vec::new();
    loop {
        let line = reader.position().line();
        if !reader.read_record(&mut row)? {
            break;
        }
        let oid = row.get(order_id_col).unwrap_or_default();
        let product = row.get(product_col).unwrap_or_default().to_string();
        let (customer, seq) = orders.get(oid).ok_or_else(|| Error::Parse {
            path: lines_path.display().to_string(),
            line,
            msg: format!("order {oid:?} not present in orders.csv"),
        })?;
        let aisle = aisles.get(&product).cloned();
        let item = if aisle_level {
            aisle.clone().ok_or_else(|| Error::Parse {
                path: lines_path.display().to_string(),
                line,
                msg: format!("product {product:?} has no aisle for --aisle-level"),
            })?
        } else {
            product
        };
        records.push(TransactionRecord {
            customer: customer.clone(),
            order_seq: *seq,
            item,
            category: if aisle_level { None } else { aisle },
        });
    }
    Ok(records)
}

/// Calendar date, only ordered — one customer-day is one Ta-Feng basket.
fn parse_date(token: &str) -> Option<(i32, u32, u32)> {
    let token = token.split_whitespace().next()?;
    if token.contains('-') {
        // ISO: YYYY-MM-DD
        let mut parts = token.split('-');
        let y = parts.next()?.parse().ok()?;
        let m = parts.next()?.parse().ok()?;
        let d = parts.next()?.parse().ok()?;
        Some((y, m, d))
    } else if token.contains('/') {
        // US-style M/D/YYYY as shipped in the public Ta-Feng dump.
        let mut parts = token.split('/');
        let m = parts.next()?.parse().ok()?;
        let d = parts.next()?.parse().ok()?;
        let y = parts.next()?.parse().ok()?;
        Some((y, m, d))
    } else {
        None
    }
}

fn read_tafeng(path: &Path) -> Result<Vec<TransactionRecord>> {
    let mut reader = open_csv(path)?;
    let headers = reader.headers()?.clone();
    let date_col = column_index(&headers, &["transaction_dt", "date", "transaction_date"], path)?;
    let customer_col = column_index(&headers, &["customer_id", "customer"], path)?;
    let product_col = column_index(&headers, &["product_id", "product"], path)?;
    let category_col = column_index(&headers, &["product_subclass", "category"], path).ok();

    struct Row {
        date: (i32, u32, u32),
        customer: String,
        item: String,
        category: Option<String>,
    }
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        if !reader.read_record(&mut record)? {
            break;
        }
        let date_token = record.get(date_col).unwrap_or_default();
        let date = parse_date(date_token).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line,
            msg: format!("unparsable date {date_token:?}"),
        })?;
        rows.push(Row {
            date,
            customer: record.get(customer_col).unwrap_or_default().to_string(),
            item: record.get(product_col).unwrap_or_default().to_string(),
            category: category_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        });
    }

    // Rank each customer's distinct shopping days chronologically.
    let mut days: HashMap<&str, Vec<(i32, u32, u32)>> = HashMap::new();
    for row in &rows {
        days.entry(&row.customer).or_default().push(row.date);
    }
    let ranks: HashMap<String, HashMap<(i32, u32, u32), u64>> = days
        .into_iter()
        .map(|(customer, mut dates)| {
            dates.sort_unstable();
            dates.dedup();
            let map = dates
                .into_iter()
                .enumerate()
                .map(|(i, d)| (d, i as u64))
                .collect();
            (customer.to_string(), map)
        })
        .collect();

    Ok(rows
        .into_iter()
        .map(|row| TransactionRecord {
            order_seq: ranks[&row.customer][&row.date],
            customer: row.customer,
            item: row.item,
            category: row.category,
        })
        .collect())
}

/// Writes a corpus in the canonical generic layout. Reloading the file
/// reproduces the histories identically.
pub fn write_generic_csv(corpus: &Corpus, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(&display, e);
    let with_category = !corpus.categories.is_empty();
    if with_category {
        writeln!(w, "customer,order_seq,item,category").map_err(io_err)?;
    } else {
        writeln!(w, "customer,order_seq,item").map_err(io_err)?;
    }
    for history in &corpus.histories {
        for (seq, basket) in history.baskets.iter().enumerate() {
            for &item in basket.items() {
                let code = corpus.vocab.code(item).expect("basket items are interned");
                if with_category {
                    let category = corpus.categories.get(&item).map(String::as_str).unwrap_or("");
                    writeln!(w, "{},{},{},{}", history.customer, seq, code, category)
                        .map_err(io_err)?;
                } else {
                    writeln!(w, "{},{},{}", history.customer, seq, code).map_err(io_err)?;
                }
            }
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Preprocessing filters, defaults matching the evaluation protocol:
/// keep the 500 most purchased items, then customers with at least ten
/// baskets of at least five items each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessParams {
    pub top_n_items: usize,
    pub min_baskets: usize,
    pub min_basket_size: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams {
            top_n_items: 500,
            min_baskets: 10,
            min_basket_size: 5,
        }
    }
}

/// Applies the assortment cap and the customer filters, in that order:
/// (1) restrict items to the `top_n_items` most frequent (basket incidence,
/// ties by first-seen order); (2) drop now-empty baskets; (3) keep customers
/// with at least `min_baskets` baskets, every one of size at least
/// `min_basket_size`. Basket sizes are therefore measured after the item
/// restriction. The retained assortment is re-interned densely.
pub fn preprocess(corpus: &Corpus, params: &PreprocessParams) -> Result<Corpus> {
    // Frequency by basket incidence. Dense ids mean first-seen order is id order.
    let mut freq = vec![0u64; corpus.vocab.len()];
    for history in &corpus.histories {
        for basket in &history.baskets {
            for &item in basket.items() {
                freq[item.index()] += 1;
            }
        }
    }
    let mut ranked: Vec<u32> = (0..corpus.vocab.len() as u32).collect();
    ranked.sort_by(|a, b| {
        freq[*b as usize]
            .cmp(&freq[*a as usize])
            .then_with(|| a.cmp(b))
    });
    let mut retained = vec![false; corpus.vocab.len()];
    for &id in ranked.iter().take(params.top_n_items) {
        retained[id as usize] = true;
    }

    let mut kept: Vec<(String, Vec<Vec<ItemId>>)> = Vec::new();
    for history in &corpus.histories {
        let baskets: Vec<Vec<ItemId>> = history
            .baskets
            .iter()
            .map(|basket| {
                basket
                    .items()
                    .iter()
                    .copied()
                    .filter(|i| retained[i.index()])
                    .collect::<Vec<ItemId>>()
            })
            .filter(|items| !items.is_empty())
            .collect();
        let enough = baskets.len() >= params.min_baskets
            && baskets.iter().all(|b| b.len() >= params.min_basket_size);
        if enough {
            kept.push((history.customer.clone(), baskets));
        }
    }
    if kept.is_empty() {
        return Err(Error::NoCustomersRetained);
    }

    // Re-intern densely over the retained histories.
    let mut vocab = Vocabulary::new();
    let mut histories = Vec::with_capacity(kept.len());
    for (customer, baskets) in kept {
        let baskets = baskets
            .into_iter()
            .map(|items| {
                items
                    .into_iter()
                    .map(|old| {
                        let code = corpus.vocab.code(old).expect("retained item is interned");
                        vocab.intern_item(code)
                    })
                    .collect::<Result<Basket>>()
            })
            .collect::<Result<Vec<Basket>>>()?;
        histories.push(PurchaseHistory::new(customer, baskets));
    }
    let mut categories = BTreeMap::new();
    for (old, category) in &corpus.categories {
        if let Some(new) = corpus
            .vocab
            .code(*old)
            .and_then(|code| vocab.get(code))
        {
            categories.insert(new, category.clone());
        }
    }
    vocab.freeze();
    Ok(Corpus {
        histories,
        vocab,
        categories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }
}

/// Disjoint 80/10/10 customer partition (largest-remainder rounding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    assignment: HashMap<String, Split>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn split_of(&self, customer: &str) -> Option<Split> {
        self.assignment.get(customer).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|&&s| s == split).count()
    }

    /// Histories belonging to one split, in the corpus order.
    pub fn select<'a>(
        &self,
        histories: &'a [PurchaseHistory],
        split: Split,
    ) -> Vec<&'a PurchaseHistory> {
        histories
            .iter()
            .filter(|h| self.split_of(&h.customer) == Some(split))
            .collect()
    }

    /// Lines `customer<TAB>{train|val|test}`, in corpus order when the
    /// histories are supplied through [`split_customers`].
    pub fn save(&self, path: &Path, order: &[PurchaseHistory]) -> Result<()> {
        let display = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(&display, e))?;
        let mut w = BufWriter::new(file);
        for history in order {
            let split = self
                .split_of(&history.customer)
                .expect("every corpus customer is assigned");
            writeln!(w, "{}\t{}", history.customer, split.tag())
                .map_err(|e| Error::io(&display, e))?;
        }
        w.flush().map_err(|e| Error::io(&display, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(&display, e))?;
        let mut assignment = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&display, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (customer, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: display.clone(),
                line: idx as u64 + 1,
                msg: format!("expected `customer<TAB>split`, got {line:?}"),
            })?;
            let split = match tag {
                "train" => Split::Train,
                "val" => Split::Validation,
                "test" => Split::Test,
                other => {
                    return Err(Error::Parse {
                        path: display.clone(),
                        line: idx as u64 + 1,
                        msg: format!("unknown split tag {other:?}"),
                    })
                }
            };
            assignment.insert(customer.to_string(), split);
        }
        Ok(SplitAssignment {
            assignment,
            seed: 0,
        })
    }
}

/// Deterministic seeded shuffle followed by an 80/10/10 partition by
/// customer count, remainder going to the largest fractional quota.
pub fn split_customers(histories: &[PurchaseHistory], seed: u64) -> Result<SplitAssignment> {
    let n = histories.len();
    if n < 3 {
        return Err(Error::TooFewCustomers(n));
    }
    let mut keys: Vec<&str> = histories.iter().map(|h| h.customer.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);

    let quotas = [0.8, 0.1, 0.1].map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut remainder = n - sizes.iter().sum::<usize>();
    // Largest fractional part first; ties resolve train > val > test.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for idx in order {
        if remainder == 0 {
            break;
        }
        sizes[idx] += 1;
        remainder -= 1;
    }

    let mut assignment = HashMap::with_capacity(n);
    let mut cursor = keys.into_iter();
    for (split, size) in [Split::Train, Split::Validation, Split::Test]
        .into_iter()
        .zip(sizes)
    {
        for key in cursor.by_ref().take(size) {
            assignment.insert(key.to_string(), split);
        }
    }
    Ok(SplitAssignment { assignment, seed })
}

/// Writes the vocabulary sidecar: `raw_code<TAB>dense_index` per line.
pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    for (i, code) in vocab.codes().iter().enumerate() {
        writeln!(w, "{code}\t{i}").map_err(|e| Error::io(&display, e))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))?;
    Ok(())
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let mut entries: Vec<(String, u64)> = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (code, index) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: idx as u64 + 1,
            msg: format!("expected `code<TAB>index`, got {line:?}"),
        })?;
        let index: u64 = index.parse().map_err(|_| Error::Parse {
            path: display.clone(),
            line: idx as u64 + 1,
            msg: format!("index {index:?} is not an integer"),
        })?;
        entries.push((code.to_string(), index));
    }
    entries.sort_by_key(|(_, i)| *i);
    let mut vocab = Vocabulary::new();
    for (pos, (code, index)) in entries.iter().enumerate() {
        if *index != pos as u64 {
            return Err(Error::Parse {
                path: display.clone(),
                line: 0,
                msg: format!("indices are not dense: expected {pos}, found {index}"),
            });
        }
        vocab.intern_item(code)?;
    }
    vocab.freeze();
    Ok(vocab)
}
