from anomalyd.cli import entry

entry()
