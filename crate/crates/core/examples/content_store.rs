//! Content-addressed storage of a package and its task data; the task hash
//! is what goes on the ledger and is also the inner hash of the statement.

use poabe::abe::{hybrid_encrypt, keygen, setup, tkgen, HybridPackage};
use poabe::encoding::Canonical;
use poabe::group::RandomTape;
use poabe::policy::{attribute_set, find_coefficients, parse_policy};
use poabe::proof::task_data_hash;
use poabe::store::{BlobStore, DirStore, TaskData};

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("poabe-store-demo"));
    let store = DirStore::open(&root).expect("store directory");

    let mut tape = RandomTape::from_u64(11);
    let (pk, msk) = setup(&mut tape);
    let policy = parse_policy("legal OR (hr AND manager)").unwrap();
    let pkg = hybrid_encrypt(&pk, &policy, b"salary review notes", &mut tape);
    let pkg_hash = store.put(&pkg.to_canonical_bytes()).unwrap();
    println!("package   {pkg_hash} -> {}", store.path_for(&pkg_hash).display());

    let sk = keygen(&pk, &msk, &attribute_set(["hr", "manager"]), &mut tape).unwrap();
    let (tk, _) = tkgen(&sk, &mut tape);
    let fetched = HybridPackage::from_canonical_bytes(&store.get(&pkg_hash).unwrap()).unwrap();
    let w = find_coefficients(&fetched.ct.policy, &tk.attrs()).expect("authorized");
    let data = TaskData { ct: fetched.ct, tk, w };
    let task_hash = store.put(&data.to_canonical_bytes()).unwrap();
    assert_eq!(task_hash.0, task_data_hash(&data.ct, &data.tk, &data.w));
    println!("task data {task_hash} ({} bytes)", data.to_canonical_bytes().len());

    // a second put is a no-op; a server fetches the same bytes by hash
    assert_eq!(store.put(&data.to_canonical_bytes()).unwrap(), task_hash);
    let again = TaskData::from_canonical_bytes(&store.get(&task_hash).unwrap()).unwrap();
    assert_eq!(again, data);
    println!("store root {}", store.root().display());
}
