import os
import tempfile

# keep reference-CDF cache files out of the user's home during tests
os.environ.setdefault("PDFACTORS_CACHE", tempfile.mkdtemp(prefix="pdfactors-cache-"))
