"""Hand-written snippet pairs for the thirty patched-API advisory rows.

For every advisory id: ``call`` really uses the API (through whatever import
style a code assistant would plausibly emit), while ``mention`` names the
same API only inside a string literal or comment and must never fire.
"""

SNIPPETS = {
    "CVE-2012-2374": {
        "call": (
            "import tornado.web\n"
            "\n"
            "def harden(handler):\n"
            "    tornado.web.RequestHandler.set_header(handler, 'X-Frame-Options', 'DENY')\n"
        ),
        "mention": (
            "import tornado.web\n"
            "notes = 'tornado.web.RequestHandler.set_header writes response headers'\n"
        ),
    },
    "CVE-2013-0294": {
        "call": (
            "from pyrad import packet\n"
            "\n"
            "auth = packet.Packet.CreateAuthenticator()\n"
        ),
        "mention": (
            "# pyrad.packet.Packet.CreateAuthenticator used to be weak\n"
            "auth = None\n"
        ),
    },
    "CVE-2013-0342": {
        "call": (
            "from pyrad import packet\n"
            "\n"
            "request_id = packet.Packet.CreateID()\n"
        ),
        "mention": (
            "todo = 'replace pyrad.packet.Packet.CreateID with a CSPRNG'\n"
        ),
    },
    "CVE-2013-4251": {
        "call": (
            "import scipy.weave\n"
            "\n"
            "scipy.weave.inline('return_val = 1;', [])\n"
        ),
        "mention": (
            "import scipy\n"
            "# scipy.weave.inline compiled C snippets into temp files\n"
            "x = 1\n"
        ),
    },
    "CVE-2014-0012": {
        "call": (
            "import jinja2\n"
            "\n"
            "cache = jinja2.FileSystemBytecodeCache('/tmp/jinja_cache')\n"
        ),
        "mention": (
            "import jinja2\n"
            "print('jinja2.FileSystemBytecodeCache wrote world-readable files')\n"
        ),
    },
    "CVE-2015-0260": {
        "call": (
            "import rhodecode\n"
            "\n"
            "repo = rhodecode.get_repo('internal-tools')\n"
        ),
        "mention": (
            "docs = 'rhodecode.get_repo leaked repository metadata'\n"
        ),
    },
    "CVE-2015-1613": {
        "call": (
            "import rhodecode\n"
            "\n"
            "rhodecode.update_repo('internal-tools', description='new')\n"
        ),
        "mention": (
            "# rhodecode.update_repo had the same disclosure problem\n"
            "pending = []\n"
        ),
    },
    "CVE-2015-7316": {
        "call": (
            "import plone\n"
            "\n"
            "allowed = plone.URLTool.isURLInPortal(tool, url)\n"
        ),
        "mention": (
            "import plone\n"
            "hint = 'plone.URLTool.isURLInPortal mishandled script URLs'\n"
        ),
    },
    "CVE-2016-10149": {
        "call": (
            "from saml2 import soap\n"
            "\n"
            "assertion = soap.parse_soap_enveloped_saml(xml_doc, None)\n"
        ),
        "mention": (
            "log_line = 'saml2.soap.parse_soap_enveloped_saml allowed XXE'\n"
        ),
    },
    "CVE-2017-12852": {
        "call": (
            "import numpy as np\n"
            "\n"
            "padded = np.pad(values, 2, mode='constant')\n"
        ),
        "mention": (
            "import numpy as np\n"
            "# numpy.pad used to loop forever on some inputs\n"
            "padded = values\n"
        ),
    },
    "CVE-2017-18342": {
        "call": (
            "import yaml\n"
            "\n"
            "config = yaml.load(stream)\n"
        ),
        "mention": (
            "import yaml\n"
            "warning = 'yaml.load without a Loader executes arbitrary code'\n"
        ),
    },
    "CVE-2018-25091": {
        "call": (
            "import urllib3\n"
            "\n"
            "http = urllib3.PoolManager()\n"
            "response = http.request('GET', 'https://example.org/')\n"
        ),
        "mention": (
            "# urllib3.PoolManager forwarded Authorization headers cross-host\n"
            "session = None\n"
        ),
    },
    "CVE-2019-20477": {
        "call": (
            "import yaml\n"
            "\n"
            "documents = list(yaml.load_all(stream))\n"
        ),
        "mention": (
            "import yaml\n"
            "msg = 'yaml.load_all shares the yaml.load code path'\n"
        ),
    },
    "CVE-2020-13092": {
        "call": (
            "from joblib import load\n"
            "\n"
            "model = load('model.pkl')\n"
        ),
        "mention": (
            "readme = 'joblib.load unpickles attacker-controlled files'\n"
        ),
    },
    "CVE-2020-13901": {
        "call": (
            "import pandas as pd\n"
            "\n"
            "def load_pickled_object(file_path):\n"
            "    return pd.read_pickle(file_path)\n"
        ),
        "mention": (
            "def warning():\n"
            "    print('pandas.read_pickle() is insecure, prefer parquet')\n"
        ),
    },
    "CVE-2021-37677": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "out = tf.raw_ops.Dequantize(input=q, min_range=lo, max_range=hi)\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "# tf.raw_ops.Dequantize crashed on bad axis values\n"
            "out = None\n"
        ),
    },
    "CVE-2021-37679": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "mapped = tf.map_fn(step, elems, dtype=tf.float32)\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "note = 'tensorflow.map_fn corrupted data with ragged inputs'\n"
        ),
    },
    "CVE-2021-3842": {
        "call": (
            "import nltk\n"
            "\n"
            "tagger = nltk.BrillTaggerTrainer.train(trainer, corpus, max_rules=10)\n"
        ),
        "mention": (
            "import nltk\n"
            "# nltk.BrillTaggerTrainer.train had a ReDoS in rule printing\n"
            "tagger = None\n"
        ),
    },
    "CVE-2021-40324": {
        "call": (
            "from cobbler import TFTPGen\n"
            "\n"
            "TFTPGen.generate_script(generator, 'profile', 'script.sh')\n"
        ),
        "mention": (
            "advice = 'cobbler.TFTPGen.generate_script wrote arbitrary paths'\n"
        ),
    },
    "CVE-2021-41195": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "total = tf.math.segment_sum(data, segment_ids)\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "# tf.math.segment_sum overflowed on large segment ids\n"
            "total = 0\n"
        ),
    },
    "CVE-2021-41198": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "tiled = tf.tile(tensor, multiples)\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "msg = 'tensorflow.tile overflowed int32 shape math'\n"
        ),
    },
    "CVE-2021-41199": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "small = tf.image.resize(frame, [224, 224])\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "# tf.image.resize overflowed for huge target sizes\n"
            "small = frame\n"
        ),
    },
    "CVE-2021-41200": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "writer = tf.summary.create_file_writer('/tmp/logs')\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "label = 'tf.summary.create_file_writer overflowed queue sizes'\n"
        ),
    },
    "CVE-2021-41202": {
        "call": (
            "import tensorflow as tf\n"
            "\n"
            "steps = tf.range(start, limit, delta)\n"
        ),
        "mention": (
            "import tensorflow as tf\n"
            "# tf.range crashed when the span overflowed\n"
            "steps = []\n"
        ),
    },
    "CVE-2021-41495": {
        "call": (
            "import numpy as np\n"
            "\n"
            "ordered = np.sort(samples, axis=None)\n"
        ),
        "mention": (
            "import numpy as np\n"
            "comment = 'numpy.sort dereferenced NULL for bad comparators'\n"
        ),
    },
    "CVE-2021-43854": {
        "call": (
            "from nltk.tokenize import PunktSentenceTokenizer\n"
            "\n"
            "tokenizer = PunktSentenceTokenizer()\n"
            "sentences = tokenizer.tokenize(text)\n"
        ),
        "mention": (
            "# nltk.tokenize.PunktSentenceTokenizer had catastrophic regex\n"
            "sentences = text.split('.')\n"
        ),
    },
    "CVE-2022-22815": {
        "call": (
            "from PIL import ImagePath\n"
            "\n"
            "outline = ImagePath.Path(coordinates)\n"
        ),
        "mention": (
            "from PIL import Image\n"
            "hint = 'PIL.ImagePath.Path left buffers uninitialized'\n"
        ),
    },
    "CVE-2022-22816": {
        "call": (
            "import PIL.ImagePath\n"
            "\n"
            "outline = PIL.ImagePath.Path([(0, 0), (1, 1)])\n"
        ),
        "mention": (
            "# PIL.ImagePath.Path also over-read its input buffer\n"
            "outline = None\n"
        ),
    },
    "CVE-2022-22817": {
        "call": (
            "from PIL import ImageMath\n"
            "\n"
            "combined = ImageMath.eval('a + b', a=first, b=second)\n"
        ),
        "mention": (
            "from PIL import Image\n"
            "print('PIL.ImageMath.eval evaluated arbitrary expressions')\n"
        ),
    },
    "CVE-2022-24766": {
        "call": (
            "from mitmproxy.net.http import http1\n"
            "\n"
            "http1.validate_headers(request.headers)\n"
        ),
        "mention": (
            "# mitmproxy.net.http.http1.validate_headers missed smuggling\n"
            "ok = True\n"
        ),
    },
}
