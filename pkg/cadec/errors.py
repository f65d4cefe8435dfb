#==============================================#
    # In this file (in-order as they appear):
    #       CadecError(ValueError)
    #       ParseError(CadecError)
    #       SchemaVersionMismatch(ParseError)
    #       ClassIndexOutOfRange(CadecError)
    #       InvalidSpec(CadecError)
    #       EmptyCorpus(CadecError)
    #       DimensionMismatch(CadecError)
    #       LengthMismatch(CadecError)
    #       InfeasibleConstraints(CadecError)
    #       MissingCounterpart(CadecError)
    #       InstanceTooLarge(CadecError)
#==============================================#

#==============================================#
# START CLASSES
#==============================================#

class CadecError(ValueError):
    '''
    Base class for every error raised by the toolkit.

    Subclasses `ValueError` so bad input can still be caught the plain way.
    `exit_code` is the process status the command line reports for it.
    '''
    exit_code = 1

class ParseError(CadecError):
    '''
    A file or document could not be read.

    source: `str` the file (or other origin) being parsed, if known.

    line: `int` 1-based line number, if known.

    field: `str` dotted path of the offending field in a structured document.
    '''
    exit_code = 2

    def __init__(self, message, source=None, line=None, field=None):
        self.source = source
        self.line = line
        self.field = field

        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append("line {}".format(line))
        if field is not None:
            where.append("field '{}'".format(field))

        if where:
            message = "{}: {}".format(", ".join(where), message)
        super().__init__(message)

class SchemaVersionMismatch(ParseError):
    '''The document was written by an incompatible schema version.'''

class ClassIndexOutOfRange(CadecError):
    '''A label index falls outside [0, num_classes).'''
    exit_code = 2

class InvalidSpec(CadecError):
    '''A generator or benchmark description is not usable.'''
    exit_code = 2

class EmptyCorpus(CadecError):
    '''Constraint extraction was given no sequences.'''
    exit_code = 3

class DimensionMismatch(CadecError):
    '''The class count of a probability matrix and a constraint set disagree.'''
    exit_code = 4

class LengthMismatch(CadecError):
    '''Prediction and ground truth cover a different number of frames.'''
    exit_code = 4

class InfeasibleConstraints(CadecError):
    '''No label sequence satisfies the hard constraints.'''
    exit_code = 5

class MissingCounterpart(CadecError):
    '''A prediction has no ground-truth file of the same name, or vice versa.'''
    exit_code = 6

class InstanceTooLarge(CadecError):
    '''The exhaustive oracle would have to enumerate too many sequences.'''
    exit_code = 1
